from __future__ import annotations

import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import dense, unitaries
from scsynth.channel import Channel1Q
from scsynth.group import haar_random, rz
from scsynth.sim import (
    DensityMatrix,
    NoiseModel,
    StateVector,
    apply_channel,
    apply_cnot,
    apply_unitary,
    apply_word,
    noisy_unitary,
    process_fidelity,
    state_fidelity,
    trace_distance,
)
from scsynth.words import clifford_t


PX = np.array([[0, 1], [1, 0]], dtype=complex)
PY = np.array([[0, -1j], [1j, 0]])
PZ = np.diag([1.0, -1.0]).astype(complex)


def embed(m, q, n):
    """Kronecker embedding of a 1-qubit operator; qubit 0 is the leftmost factor."""
    ops = [np.eye(2)] * n
    ops[q] = m
    return reduce(np.kron, ops)


def cnot_matrix(c, t, n):
    p0 = np.diag([1, 0])
    p1 = np.diag([0, 1])
    x = np.array([[0, 1], [1, 0]])
    return embed(p0, c, n) + embed(p1, c, n) @ embed(x, t, n)


def random_state(rng, n):
    return StateVector.from_amplitudes(rng.normal(size=2**n) + 1j * rng.normal(size=2**n))


@given(unitaries(), st.integers(0, 3))
def test_apply_unitary_matches_kron(u, q):
    rng = np.random.default_rng(0)
    s = random_state(rng, 4)
    out = apply_unitary(s, u, q)
    assert np.allclose(out.amps, embed(dense(u), q, 4) @ s.amps, atol=1e-12)
    rho = apply_unitary(s.density(), u, q)
    assert np.allclose(rho.rho, np.outer(out.amps, out.amps.conj()), atol=1e-12)


@pytest.mark.parametrize("c,t", [(0, 1), (1, 0), (0, 2), (2, 1)])
def test_cnot_matches_matrix(rng, c, t):
    s = random_state(rng, 3)
    m = cnot_matrix(c, t, 3)
    assert np.allclose(apply_cnot(s, c, t).amps, m @ s.amps)
    assert np.allclose(apply_cnot(s.density(), c, t).rho, m @ s.density().rho @ m.T)


def test_apply_channel_matches_kraus_embedding(rng):
    g = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    iso, _ = np.linalg.qr(g)
    kraus = [iso[:2], iso[2:]]
    ch = Channel1Q.from_kraus(kraus)
    rho = random_state(rng, 3).density()
    for q in range(3):
        expected = sum(embed(k, q, 3) @ rho.rho @ embed(k, q, 3).conj().T for k in kraus)
        assert np.allclose(apply_channel(rho, ch, q).rho, expected, atol=1e-12)


def test_word_order_and_noise(rng):
    gs = clifford_t()
    w = gs.parse("H T H H T T H Tdg")
    s = random_state(rng, 1)
    out = apply_word(s, w)
    assert abs(np.vdot(out.amps, dense(w.unitary) @ s.amps)) == pytest.approx(1.0, abs=1e-12)
    rev = gs.word(reversed(w.indices))
    assert abs(np.vdot(out.amps, dense(rev.unitary) @ s.amps)) < 0.999
    noisy = apply_word(s.density(), w, NoiseModel(0.0, 0.1))
    assert np.trace(noisy.rho).real == pytest.approx(1.0)
    with pytest.raises(TypeError):
        apply_word(s, w, NoiseModel(0.0, 0.1))


def test_noisy_unitary_policies():
    t = rz(math.pi / 4)
    assert noisy_unitary(t, NoiseModel(0.01)).q == pytest.approx(rz(math.pi / 4 + 0.01).q)
    assert noisy_unitary(t, NoiseModel(0.01, axis_policy="z")).q == pytest.approx(rz(math.pi / 4 + 0.01).q)
    ident = rz(0.0)
    assert noisy_unitary(ident, NoiseModel(0.01)) == ident
    with pytest.raises(ValueError):
        NoiseModel(axis_policy="x")
    with pytest.raises(ValueError):
        NoiseModel(depolarizing_p=1.5)


@given(st.floats(-1, 1), unitaries())
def test_process_fidelity_of_rotation_error(alpha, u):
    ch = Channel1Q.from_unitary(u).then(Channel1Q.from_unitary(rz(alpha)))
    # Entanglement fidelity |tr(U^dag V)|^2 / 4, here computed from dense matrices.
    v = dense(rz(alpha)) @ dense(u)
    expected = abs(np.trace(dense(u).conj().T @ v)) ** 2 / 4
    assert process_fidelity(ch, u) == pytest.approx(expected, abs=1e-12)
    assert process_fidelity(ch, u) == pytest.approx(math.cos(alpha / 2) ** 2, abs=1e-12)


def test_trace_distance_and_fidelity(rng):
    zero, one = StateVector.zero(1), StateVector.from_amplitudes([0, 1])
    assert trace_distance(zero, one) == pytest.approx(1.0)
    assert trace_distance(zero, zero) == pytest.approx(0.0)
    mixed = DensityMatrix.from_matrix(np.eye(2) / 2)
    assert trace_distance(zero, mixed) == pytest.approx(0.5)
    assert state_fidelity(mixed, zero) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        trace_distance(StateVector.zero(1), StateVector.zero(2))
    # Pure states: D = sqrt(1 - |<a|b>|^2).
    a, b = random_state(rng, 2), random_state(rng, 2)
    assert trace_distance(a, b) == pytest.approx(math.sqrt(1 - abs(np.vdot(a.amps, b.amps)) ** 2))


def test_bounds_checks():
    with pytest.raises(ValueError):
        StateVector.zero(13)
    with pytest.raises(IndexError):
        apply_unitary(StateVector.zero(2), haar_random(np.random.default_rng(0)), 2)
    with pytest.raises(ValueError):
        apply_cnot(StateVector.zero(2), 1, 1)
    with pytest.raises(TypeError):
        apply_channel(StateVector.zero(1), Channel1Q.identity(), 0)


def test_apply_word_examples(rng):
    gs = clifford_t()
    s = random_state(rng, 2)
    assert np.array_equal(apply_word(s, gs.identity(), qubit=1).amps, s.amps)
    out = apply_word(StateVector.zero(1), gs.parse("H T T T T H"))
    assert np.allclose(np.abs(out.amps), [0, 1], atol=1e-12)


def test_trace_distance_zero_plus():
    plus = StateVector.from_amplitudes([1, 1])
    assert trace_distance(StateVector.zero(1), plus) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def _overrotated(u, alpha):
    """Dense oracle: rotation angle in [0, pi] about the gate's axis, plus alpha."""
    su = u / np.sqrt(np.linalg.det(u))
    if np.trace(su).real < 0:
        su = -su
    n = np.array([(1j * np.trace(p @ su)).real / 2 for p in (PX, PY, PZ)])
    s = np.linalg.norm(n)
    if s < 1e-12:
        return u
    n /= s
    if abs(np.trace(su)) < 1e-12:
        # At angle pi the axis sign is a convention: first nonzero component positive.
        n *= np.sign(n[np.abs(n) > 1e-12][0])
    theta = 2 * math.atan2(s, np.trace(su).real / 2)
    ns = n[0] * PX + n[1] * PY + n[2] * PZ
    t = theta + alpha
    return math.cos(t / 2) * np.eye(2) - 1j * math.sin(t / 2) * ns


def test_long_noisy_word_matches_per_gate_kraus(rng):
    gs = clifford_t()
    w = gs.word(list(rng.integers(0, len(gs.generators), size=100)))
    noise = NoiseModel(overrotation_alpha=0.01, depolarizing_p=1e-3)
    start = random_state(rng, 1).density()
    p = noise.depolarizing_p
    dep = [math.sqrt(1 - 3 * p / 4) * np.eye(2)] + [math.sqrt(p / 4) * m for m in (PX, PY, PZ)]
    rho = start.rho
    for i in reversed(w.indices):
        u = _overrotated(dense(gs.generators[i].unitary), noise.overrotation_alpha)
        rho = u @ rho @ u.conj().T
        rho = sum(k @ rho @ k.conj().T for k in dep)
    assert np.allclose(apply_word(start, w, noise).rho, rho, atol=1e-12)


def test_depolarizing_process_fidelity(rng):
    u = haar_random(rng)
    for p in (0.0, 0.01, 0.3):
        ch = Channel1Q.from_unitary(u).then(Channel1Q.depolarizing(p))
        assert process_fidelity(ch, u) == pytest.approx(1 - 3 * p / 4, abs=1e-14)


def test_distance_dominance(net, rng):
    from scsynth.group import op_distance
    from scsynth.sk import SkParams, sk_synthesize

    for _ in range(20):
        t = haar_random(rng)
        w = sk_synthesize(t, SkParams(1, net))
        s = random_state(rng, 1)
        ideal = apply_unitary(s, t, 0)
        assert trace_distance(apply_word(s, w), ideal) <= op_distance(w.unitary, t) + 1e-12


def test_opposite_overrotations_cancel():
    from scsynth.group import IDENTITY, dagger, multiply, op_distance

    gs = clifford_t()
    for g in gs.generators:
        u = g.unitary
        plus = multiply(noisy_unitary(u, NoiseModel(0.01)), dagger(u))
        minus = multiply(noisy_unitary(u, NoiseModel(-0.01)), dagger(u))
        assert op_distance(multiply(plus, minus), IDENTITY) < 1e-14


def test_normalization_survives_many_operations(rng):
    gs = clifford_t()
    s, d = StateVector.zero(3), DensityMatrix.zero(2)
    dep = Channel1Q.depolarizing(0.01)
    for _ in range(10_000):
        kind = rng.integers(3)
        if kind == 0:
            u = haar_random(rng)
            s = apply_unitary(s, u, int(rng.integers(3)))
            d = apply_unitary(d, u, int(rng.integers(2)))
        elif kind == 1:
            s = apply_cnot(s, 0, int(rng.integers(1, 3)))
            d = apply_cnot(d, 1, 0)
        else:
            d = apply_channel(d, dep, int(rng.integers(2)))
            s = apply_word(s, gs.parse("H T"), NoiseModel(0.01), int(rng.integers(3)))
    assert abs(np.linalg.norm(s.amps) - 1) <= 1e-12
    assert abs(np.trace(d.rho).real - 1) <= 1e-10
    assert np.linalg.eigvalsh(d.rho).min() >= -1e-10
