from __future__ import annotations

import itertools
from dataclasses import replace
from functools import reduce

import numpy as np
import pytest

from scsynth.forrelation import (
    BooleanFn,
    CircuitIR,
    CompileError,
    ForrelationInstance,
    Op,
    build_circuit,
    compile_circuit,
    decompose_circuit,
    decompose_oracle,
    forrelation_k,
    forrelation_value,
    load_instance,
    sample_instance,
    save_instance,
    score,
    simulate,
)
from scsynth.forrelation import _ideal_state
from scsynth.group import op_distance, rz
from scsynth.scs import ScsConfig
from scsynth.sim import NoiseModel


def brute_forrelation(fns):
    n, k = fns[0].n, len(fns)
    total = 0.0
    for xs in itertools.product(range(2**n), repeat=k):
        term = 1.0
        for i, x in enumerate(xs):
            term *= fns[i].values[x]
            if i < k - 1:
                term *= (-1) ** bin(x & xs[i + 1]).count("1")
        total += term
    return total / 2 ** ((k + 1) * n / 2)


def random_fn(rng, n):
    return BooleanFn(n, rng.choice((-1, 1), size=2**n))


def oracle_unitary(ops, n):
    """Dense unitary of a CNOT/Rz network, qubit 0 most significant."""
    dim = 2**n
    u = np.eye(dim, dtype=complex)
    for op in ops:
        if op.kind == "cnot":
            c, t = op.qubits
            m = np.zeros((dim, dim))
            for x in range(dim):
                y = x ^ (((x >> (n - 1 - c)) & 1) << (n - 1 - t))
                m[y, x] = 1
        else:
            rzm = np.diag([np.exp(-0.5j * op.angle), np.exp(0.5j * op.angle)])
            facs = [np.eye(2)] * n
            facs[op.qubits[0]] = rzm
            m = reduce(np.kron, facs)
        u = m @ u
    return u


@pytest.mark.parametrize("n,k", [(1, 2), (2, 2), (3, 2), (2, 3), (3, 3)])
def test_value_matches_brute_force(rng, n, k):
    for _ in range(5):
        fns = [random_fn(rng, n) for _ in range(k)]
        assert forrelation_k(fns) == pytest.approx(brute_forrelation(fns), abs=1e-12)


def test_two_fold_alias(rng):
    f, g = random_fn(rng, 3), random_fn(rng, 3)
    assert forrelation_value(f, g) == forrelation_k([f, g])
    with pytest.raises(ValueError):
        forrelation_value(f, random_fn(rng, 2))


def test_circuit_amplitude_is_phi(rng):
    for n in (1, 2, 3, 4):
        for k in (2, 3):
            inst = sample_instance(n, k, "uniform", rng)
            amp = _ideal_state(build_circuit(inst), inst).amps[0]
            assert amp.real == pytest.approx(inst.phi, abs=1e-12)
            assert abs(amp.imag) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_oracle_decomposition_exact(rng, n):
    for _ in range(10):
        f = random_fn(rng, n)
        u = oracle_unitary(decompose_oracle(f), n)
        assert np.allclose(u, np.diag(np.diag(u)), atol=1e-12)
        ratio = np.diag(u) / f.values
        assert np.allclose(ratio, ratio[0], atol=1e-10)


def test_decomposed_circuit_reproduces_amplitude(rng):
    inst = sample_instance(3, 3, "forrelated", rng)
    flat = decompose_circuit(build_circuit(inst), inst)
    assert flat.count("oracle") == 0
    a = _ideal_state(flat).amps
    b = _ideal_state(build_circuit(inst), inst).amps
    assert abs(abs(np.vdot(a, b)) - 1) < 1e-12


def test_forrelated_sampler_is_biased(rng):
    f = [sample_instance(4, 2, "forrelated", rng).phi for _ in range(200)]
    u = [sample_instance(4, 2, "uniform", rng).phi for _ in range(200)]
    assert np.mean(f) > 0.5
    assert abs(np.mean(u)) < 0.1
    # k = 2: the second function is the sign pattern of the first one's spectrum.
    inst = sample_instance(3, 2, "forrelated", rng)
    w = inst.fns[0].walsh()
    nz = np.abs(w) > 1e-12
    assert np.array_equal(np.sign(w[nz]), inst.fns[1].values[nz])


def test_instance_json_round_trip(tmp_path, rng):
    inst = sample_instance(3, 3, "forrelated", rng, seed=4)
    save_instance(inst, tmp_path / "i.json")
    back = load_instance(tmp_path / "i.json")
    assert back == inst
    d = inst.to_dict()
    d["phi"] = d["phi"] + 0.1
    with pytest.raises(ValueError):
        ForrelationInstance.from_dict(d)


def test_validation(rng):
    with pytest.raises(ValueError):
        BooleanFn(2, np.array([1, 0, 1, 1]))
    with pytest.raises(ValueError):
        BooleanFn(7, np.ones(128))
    with pytest.raises(ValueError):
        sample_instance(2, 4, "uniform", rng)
    with pytest.raises(ValueError):
        sample_instance(2, 2, "other", rng)


def test_compile_noiseless_within_union_bound(net, rng):
    inst = sample_instance(2, 2, "forrelated", rng)
    flat = decompose_circuit(build_circuit(inst), inst)
    with pytest.raises(ValueError):
        compile_circuit(build_circuit(inst), "deterministic", 2.0**-8, net=net)
    for mode in ("deterministic", "scs"):
        c = compile_circuit(flat, mode, 2.0**-8, net=net)
        s = score(c, inst)
        bound = sum(max(op_distance(w.unitary, rz(op.angle)) for w in op.words) for op in c.ops if op.kind == "word")
        assert s.total_variation <= bound + 1e-12
        assert s.ideal_p_accept == pytest.approx(inst.phi**2, abs=1e-12)
        assert c.t_count() >= 0


def test_noise_lowers_fidelity(net, rng):
    inst = sample_instance(2, 3, "forrelated", rng)
    c = compile_circuit(decompose_circuit(build_circuit(inst), inst), "deterministic", 2.0**-8, net=net)
    clean, noisy = score(c, inst), score(c, inst, NoiseModel(0.05))
    assert noisy.fidelity < clean.fidelity
    rho = simulate(c, NoiseModel(0.05, 0.01), inst)
    assert np.trace(rho.rho).real == pytest.approx(1.0)


def test_compile_error_reports_position(net, rng):
    inst = sample_instance(2, 2, "forrelated", rng)
    flat = decompose_circuit(build_circuit(inst), inst)
    # An angle the net cannot hit exactly at depth 0.
    bad = CircuitIR(flat.n, flat.ops + (Op("rz", (0,), angle=0.123),))
    with pytest.raises(CompileError) as info:
        compile_circuit(bad, "deterministic", 1e-12, net=net, cfg=replace(ScsConfig(), depth=0))
    assert info.value.position >= 0


def test_one_bit_values():
    one, flip = BooleanFn(1, [1, 1]), BooleanFn(1, [1, -1])
    assert forrelation_value(one, one) == pytest.approx(1 / np.sqrt(2), abs=1e-15)
    assert forrelation_value(flip, one) == pytest.approx(1 / np.sqrt(2), abs=1e-15)
    assert brute_forrelation([flip, one]) == pytest.approx(1 / np.sqrt(2), abs=1e-15)


def test_decompose_examples():
    assert decompose_oracle(BooleanFn(3, np.ones(8))) == []
    (op,) = decompose_oracle(BooleanFn(1, [1, -1]))
    assert op.kind == "rz" and op.qubits == (0,) and abs(op.angle) == pytest.approx(np.pi)
    z = np.diag([1, -1])
    u = oracle_unitary([op], 1)
    assert abs(np.trace(z.conj().T @ u)) / 2 == pytest.approx(1.0, abs=1e-12)


def test_trivial_oracles_accept_half(net):
    one = BooleanFn(1, [1, 1])
    inst = ForrelationInstance((one, one), forrelation_k((one, one)), "uniform")
    flat = decompose_circuit(build_circuit(inst), inst)
    assert flat.count("rz") == 0
    compiled = compile_circuit(flat, "deterministic", 2.0**-10, net=net)
    assert compiled == flat
    s = score(compiled, inst)
    assert s.ideal_p_accept == pytest.approx(0.5, abs=1e-12)
    assert s.p_accept == pytest.approx(0.5, abs=1e-12)


def test_t_angle_compiles_to_t(net):
    c = CircuitIR(1, (Op("h", (0,)), Op("rz", (0,), angle=np.pi / 4)))
    (h, word) = compile_circuit(c, "deterministic", 2.0**-10, net=net).ops
    assert h == c.ops[0]
    (w,) = word.words
    assert str(w) == "T" and op_distance(w.unitary, rz(np.pi / 4)) == 0


def test_full_compile_words_reverified(net, rng):
    from scsynth.sim import StateVector, apply_unitary, apply_word

    inst = sample_instance(3, 3, "forrelated", rng)
    eps = 2.0**-10
    c = compile_circuit(decompose_circuit(build_circuit(inst), inst), "deterministic", eps, net=net)
    for op in c.ops:
        if op.kind == "word":
            for w in op.words:
                # Simulate the word and the target on |+> and compare states.
                plus = StateVector.from_amplitudes([1, 1])
                a, b = apply_word(plus, w), apply_unitary(plus, rz(op.angle), 0)
                assert np.sqrt(max(0.0, 1 - abs(np.vdot(a.amps, b.amps)) ** 2)) <= eps


def test_sampler_examples(rng):
    n = 4000
    counts = {}
    for _ in range(n):
        key = tuple(sample_instance(1, 2, "uniform", rng).fns[0].values)
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 4
    assert all(abs(c - n / 4) <= 3 * np.sqrt(n * 3 / 16) for c in counts.values())
    uni = np.mean([abs(sample_instance(4, 2, "uniform", rng).phi) for _ in range(1000)])
    forr = np.mean([sample_instance(4, 2, "forrelated", rng).phi for _ in range(1000)])
    assert uni < 2 * 2.0 ** (-4 / 2) and uni < forr and forr > 0.4
