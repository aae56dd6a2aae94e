"""Forrelation instances, k-fold circuits, Walsh oracle decomposition, compilation, scoring."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.linalg import hadamard

from .channel import Channel1Q
from .group import Unitary2, op_distance, rz
from .net import EpsilonNet, default_net
from .rc import average_channel, pauli_twirl, word_channel
from .scs import ScsConfig, derive_seed, ensemble_synthesize
from .sim import (
    DensityMatrix,
    NoiseModel,
    StateVector,
    apply_channel,
    apply_cnot,
    apply_unitary,
    gate_channel,
    state_fidelity,
)
from .sk import depth_for, synthesize_to
from .words import GateWord

__all__ = [
    "BooleanFn",
    "ForrelationInstance",
    "Op",
    "CircuitIR",
    "CompileError",
    "Score",
    "MAX_BITS",
    "forrelation_value",
    "forrelation_k",
    "sample_instance",
    "build_circuit",
    "decompose_oracle",
    "decompose_circuit",
    "compile_circuit",
    "simulate",
    "score",
    "save_instance",
    "load_instance",
]

MAX_BITS = 6
_H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_H = Unitary2.from_matrix(_H_MATRIX)


@dataclass(frozen=True, eq=False)
class BooleanFn:
    n: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=int)
        if not 1 <= self.n <= MAX_BITS:
            raise ValueError(f"n must be in [1, {MAX_BITS}]")
        if v.shape != (2**self.n,):
            raise ValueError(f"expected {2**self.n} values, got {v.shape}")
        if not np.all(np.abs(v) == 1):
            raise ValueError("values must be +1 or -1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __eq__(self, other) -> bool:
        return isinstance(other, BooleanFn) and self.n == other.n and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash((self.n, self.values.tobytes()))

    def walsh(self) -> np.ndarray:
        """Normalized spectrum ``2^-n sum_x f(x) (-1)^(s.x)``."""
        return hadamard(2**self.n) @ self.values / 2**self.n


def _wht(v: np.ndarray) -> np.ndarray:
    # Orthonormal transform, i.e. H^{(x)n} on an amplitude vector.
    return hadamard(v.size) @ v / math.sqrt(v.size)


def forrelation_value(f: BooleanFn, g: BooleanFn) -> float:
    """``2^(-3n/2) sum_{x,y} f(x) (-1)^(x.y) g(y)``."""
    if f.n != g.n:
        raise ValueError("functions must have the same number of bits")
    return forrelation_k([f, g])


def forrelation_k(fns: Sequence[BooleanFn]) -> float:
    """k-fold value ``2^(-(k+1)n/2) sum f1(x1) (-1)^(x1.x2) f2(x2) ... fk(xk)``."""
    n = fns[0].n
    if any(f.n != n for f in fns):
        raise ValueError("functions must have the same number of bits")
    a = np.full(2**n, 2.0 ** (-n / 2))
    for i, f in enumerate(fns):
        a = f.values * a
        if i < len(fns) - 1:
            a = _wht(a)
    return float(a.sum() * 2.0 ** (-n / 2))


@dataclass(frozen=True)
class ForrelationInstance:
    fns: tuple[BooleanFn, ...]
    phi: float
    label: str
    seed: int | None = None

    def __post_init__(self):
        if len(self.fns) not in (2, 3):
            raise ValueError("k must be 2 or 3")
        if self.label not in ("forrelated", "uniform"):
            raise ValueError("label must be 'forrelated' or 'uniform'")

    @property
    def n(self) -> int:
        return self.fns[0].n

    @property
    def k(self) -> int:
        return len(self.fns)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "fns": [f.values.tolist() for f in self.fns],
            "label": self.label,
            "phi": self.phi,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForrelationInstance":
        fns = tuple(BooleanFn(int(d["n"]), np.array(v)) for v in d["fns"])
        if len(fns) != int(d["k"]):
            raise ValueError("k does not match the number of functions")
        phi = forrelation_k(fns)
        if "phi" in d and abs(phi - float(d["phi"])) > 1e-12:
            raise ValueError("recorded phi does not match the functions")
        return cls(fns, phi, d["label"], d.get("seed"))


def save_instance(inst: ForrelationInstance, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(inst.to_dict(), fh, sort_keys=True)


def load_instance(path: str | os.PathLike) -> ForrelationInstance:
    with open(path, encoding="utf-8") as fh:
        return ForrelationInstance.from_dict(json.load(fh))


def _signs(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    out = np.sign(x).astype(int)
    ties = np.abs(x) < 1e-12
    out[ties] = rng.choice((-1, 1), size=int(ties.sum()))
    return out


def sample_instance(n: int, k: int, label: str, rng: np.random.Generator, seed: int | None = None) -> ForrelationInstance:
    """Uniform: i.i.d. uniform functions. Forrelated: a greedy sign chain.

    In the forrelated case ``f1`` is uniform and each next function is the
    sign of the amplitude vector reaching its oracle, so for ``k = 2`` the
    second function is ``sign(walsh(f1))``.
    """
    if label not in ("forrelated", "uniform"):
        raise ValueError("label must be 'forrelated' or 'uniform'")
    first = rng.choice((-1, 1), size=2**n)
    fns = [BooleanFn(n, first)]
    for _ in range(k - 1):
        if label == "uniform":
            fns.append(BooleanFn(n, rng.choice((-1, 1), size=2**n)))
            continue
        a = np.full(2**n, 2.0 ** (-n / 2))
        for f in fns:
            a = _wht(f.values * a)
        fns.append(BooleanFn(n, _signs(a, rng)))
    fns = tuple(fns)
    return ForrelationInstance(fns, forrelation_k(fns), label, seed)


# ---------------------------------------------------------------------------
# circuits


@dataclass(frozen=True)
class Op:
    """One circuit operation.

    kinds: ``h``, ``cnot`` (qubits = control, target), ``rz``, ``oracle``
    (``fn`` indexes the instance's functions), ``word`` (a compiled ``rz``
    carrying one or more words; several words mean an ensemble average),
    and ``measure``.
    """

    kind: str
    qubits: tuple[int, ...] = ()
    angle: float | None = None
    fn: int | None = None
    words: tuple[GateWord, ...] = field(default=(), compare=False)
    twirl: bool = False


@dataclass(frozen=True)
class CircuitIR:
    """``rc`` marks a randomly compiled circuit: every noisy single-qubit
    gate, Hadamards included, is Pauli-twirled when simulated."""

    n: int
    ops: tuple[Op, ...]
    rc: bool = False

    def count(self, kind: str) -> int:
        return sum(op.kind == kind for op in self.ops)

    def t_count(self) -> float:
        """T-count of the compiled circuit (ensemble ops count their mean)."""
        total = 0.0
        for op in self.ops:
            if op.kind == "word":
                total += float(np.mean([w.t_count() for w in op.words]))
        return total


def _h_layer(n: int) -> list[Op]:
    return [Op("h", (q,)) for q in range(n)]


def build_circuit(inst: ForrelationInstance) -> CircuitIR:
    n = inst.n
    ops = _h_layer(n)
    for i in range(inst.k):
        ops.append(Op("oracle", fn=i))
        ops.extend(_h_layer(n))
    ops.append(Op("measure"))
    return CircuitIR(n, tuple(ops))


def decompose_oracle(fn: BooleanFn) -> list[Op]:
    """CNOT-ladder plus Rz network for ``diag(fn)`` up to global phase.

    Each nonzero Walsh coefficient ``c_S`` (``S`` nonempty) gives one
    ``Rz(pi * c_S)`` on the last qubit of ``S`` between parity ladders.
    """
    n = fn.n
    coef = fn.walsh()
    ops: list[Op] = []
    for s in range(1, 2**n):
        c = coef[s]
        if abs(c) < 1e-12:
            continue
        qs = [q for q in range(n) if (s >> (n - 1 - q)) & 1]
        tgt = qs[-1]
        ladder = [Op("cnot", (q, tgt)) for q in qs[:-1]]
        ops.extend(ladder)
        ops.append(Op("rz", (tgt,), angle=float(math.pi * c)))
        ops.extend(reversed(ladder))
    return ops


def decompose_circuit(c: CircuitIR, inst: ForrelationInstance) -> CircuitIR:
    ops: list[Op] = []
    for op in c.ops:
        if op.kind == "oracle":
            ops.extend(decompose_oracle(inst.fns[op.fn]))
        else:
            ops.append(op)
    return CircuitIR(c.n, tuple(ops))


class CompileError(RuntimeError):
    def __init__(self, position: int, cause: Exception):
        super().__init__(f"synthesis failed for the gate at position {position}: {cause}")
        self.position = position
        self.cause = cause


def compile_circuit(
    c: CircuitIR,
    synthesizer: str,
    eps: float,
    *,
    net: EpsilonNet | None = None,
    cfg: ScsConfig | None = None,
    jobs: int = 1,
    rc_scope: str = "all",
    cache: dict | None = None,
) -> CircuitIR:
    """Replace every ``rz`` with a synthesized word (``deterministic``) or
    an SCS ensemble (``scs``).

    SCS output is randomly compiled: ``rc_scope="all"`` twirls every noisy
    single-qubit gate, ``"words"`` only the synthesized words. Each distinct
    angle is synthesized once (``cache`` may be shared between calls with
    the same settings); every emitted word is checked against its target
    at ``eps``.
    """
    if rc_scope not in ("all", "words"):
        raise ValueError("rc_scope must be 'all' or 'words'")
    if synthesizer not in ("deterministic", "scs"):
        raise ValueError("synthesizer must be 'deterministic' or 'scs'")
    if any(op.kind == "oracle" for op in c.ops):
        raise ValueError("decompose oracles before compiling")
    net = default_net() if net is None else net
    cfg = ScsConfig(eps_target=eps) if cfg is None else replace(cfg, eps_target=eps)
    depth = depth_for(eps, net) if cfg.depth is None else cfg.depth
    cache = {} if cache is None else cache
    ops: list[Op] = []
    for pos, op in enumerate(c.ops):
        if op.kind != "rz":
            ops.append(op)
            continue
        target = rz(op.angle)
        try:
            key = (synthesizer, eps, depth, cfg, op.angle)
            words = cache.get(key)
            if words is None:
                if synthesizer == "deterministic":
                    words = (synthesize_to(target, eps, net, depth),)
                else:
                    seed = derive_seed(cfg.master_seed, _angle_key(op.angle))
                    run_cfg = replace(cfg, master_seed=seed, depth=depth)
                    words = ensemble_synthesize(target, run_cfg, net, jobs).words
                cache[key] = words
        except Exception as exc:
            raise CompileError(pos, exc) from exc
        for w in words:
            d = op_distance(w.unitary, target)
            if d > eps:
                raise CompileError(pos, ValueError(f"word misses target by {d:.3g}"))
        ops.append(Op("word", op.qubits, op.angle, words=words, twirl=synthesizer == "scs"))
    return CircuitIR(c.n, tuple(ops), rc=synthesizer == "scs" and rc_scope == "all")


def _angle_key(angle: float) -> int:
    return int(round(angle * 2**40)) & ((1 << 64) - 1)


# ---------------------------------------------------------------------------
# simulation and scoring


def _ideal_state(c: CircuitIR, inst: ForrelationInstance | None = None) -> StateVector:
    s = StateVector.zero(c.n)
    for op in c.ops:
        if op.kind == "h":
            # The literal Hadamard matrix keeps the |0..0> amplitude phase-exact.
            s = apply_unitary(s, _H_MATRIX, op.qubits[0])
        elif op.kind == "cnot":
            s = apply_cnot(s, *op.qubits)
        elif op.kind in ("rz", "word"):
            s = apply_unitary(s, rz(op.angle), op.qubits[0])
        elif op.kind == "oracle":
            s = StateVector(s.n, s.amps * inst.fns[op.fn].values)
    return s


def simulate(c: CircuitIR, noise: NoiseModel = NoiseModel(), inst: ForrelationInstance | None = None) -> DensityMatrix:
    """Noisy density-matrix run from ``|0..0>``.

    Hadamards and compiled words take gate noise; CNOTs are ideal. A word
    op with several words applies the average of their channels, which
    equals drawing an independent member for that gate on every shot.
    """
    rho = DensityMatrix.zero(c.n)
    h_ch = gate_channel(_H, noise)
    if c.rc and not noise.is_noiseless:
        ideal = Channel1Q.from_unitary(_H).ptm
        h_ch = Channel1Q(pauli_twirl(Channel1Q(h_ch.ptm @ ideal.T)).ptm @ ideal)
    chans: dict[int, Channel1Q] = {}
    for op in c.ops:
        if op.kind == "h":
            rho = apply_channel(rho, h_ch, op.qubits[0])
        elif op.kind == "cnot":
            rho = apply_cnot(rho, *op.qubits)
        elif op.kind == "rz":
            rho = apply_unitary(rho, rz(op.angle), op.qubits[0])
        elif op.kind == "word":
            key = id(op.words)
            ch = chans.get(key)
            if ch is None:
                if len(op.words) == 1 and not op.twirl:
                    ch = word_channel(op.words[0], noise)
                else:
                    ch = average_channel(op.words, noise, twirl=op.twirl)
                chans[key] = ch
            rho = apply_channel(rho, ch, op.qubits[0])
        elif op.kind == "oracle":
            v = inst.fns[op.fn].values
            rho = DensityMatrix(rho.n, rho.rho * np.outer(v, v))
    return rho


@dataclass(frozen=True)
class Score:
    fidelity: float
    p_accept: float
    total_variation: float
    ideal_p_accept: float

    def to_dict(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "p_accept": self.p_accept,
            "total_variation": self.total_variation,
            "ideal_p_accept": self.ideal_p_accept,
        }


def score(compiled: CircuitIR, inst: ForrelationInstance, noise: NoiseModel = NoiseModel()) -> Score:
    """Output-state fidelity against the ideal circuit, acceptance probability, and TV distance.

    The fidelity is ``<psi_ideal| rho |psi_ideal>`` for the pre-measurement
    state on input ``|0..0>``, the small-scale stand-in for process fidelity.
    """
    ideal = _ideal_state(build_circuit(inst), inst)
    rho = simulate(compiled, noise, inst)
    p = rho.probabilities()
    q = ideal.probabilities()
    return Score(
        fidelity=state_fidelity(rho, ideal),
        p_accept=float(p[0]),
        total_variation=float(0.5 * np.abs(p - q).sum()),
        ideal_p_accept=float(q[0]),
    )
