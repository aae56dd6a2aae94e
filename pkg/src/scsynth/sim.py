"""Dense state-vector and density-matrix simulation with gate-level noise.

Qubit 0 is the most significant bit of a basis index. A gate word is
applied in reverse written order (its last gate acts first), matching
:class:`scsynth.words.GateWord`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import Channel1Q, ptm_to_superop
from .group import Unitary2, from_axis_angle, to_axis_angle
from .words import GateWord

__all__ = [
    "NoiseModel",
    "StateVector",
    "DensityMatrix",
    "MAX_QUBITS",
    "noisy_unitary",
    "gate_channel",
    "apply_word",
    "apply_unitary",
    "apply_channel",
    "apply_cnot",
    "trace_distance",
    "process_fidelity",
    "state_fidelity",
]

MAX_QUBITS = 12
AXIS_POLICIES = ("gate", "z")


@dataclass(frozen=True)
class NoiseModel:
    """Per-gate over-rotation followed by depolarizing noise.

    ``axis_policy="gate"`` adds ``overrotation_alpha`` to the rotation angle
    about the gate's own axis; ``"z"`` adds an extra ``Rz(alpha)`` instead.
    Gates with rotation angle 0 are left untouched under ``"gate"``.
    """

    overrotation_alpha: float = 0.0
    depolarizing_p: float = 0.0
    axis_policy: str = "gate"

    def __post_init__(self):
        if not 0.0 <= self.depolarizing_p <= 1.0:
            raise ValueError("depolarizing_p must lie in [0, 1]")
        if self.axis_policy not in AXIS_POLICIES:
            raise ValueError(f"axis_policy must be one of {AXIS_POLICIES}")

    @property
    def is_noiseless(self) -> bool:
        return self.overrotation_alpha == 0.0 and self.depolarizing_p == 0.0

    @property
    def is_unitary(self) -> bool:
        return self.depolarizing_p == 0.0


def noisy_unitary(u: Unitary2, noise: NoiseModel) -> Unitary2:
    """The gate actually applied for ideal gate ``u`` (coherent part only)."""
    alpha = noise.overrotation_alpha
    if alpha == 0.0:
        return u
    if noise.axis_policy == "z":
        return from_axis_angle((0.0, 0.0, 1.0), alpha) @ u
    axis, angle = to_axis_angle(u)
    if angle == 0.0:
        return u
    return from_axis_angle(axis, angle + alpha)


def gate_channel(u: Unitary2, noise: NoiseModel) -> Channel1Q:
    ch = Channel1Q.from_unitary(noisy_unitary(u, noise))
    if noise.depolarizing_p:
        ch = ch.then(Channel1Q.depolarizing(noise.depolarizing_p))
    return ch


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}]")


@dataclass(frozen=True, eq=False)
class StateVector:
    n: int
    amps: np.ndarray

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        _check_n(n)
        a = np.zeros(2**n, dtype=complex)
        a[0] = 1.0
        return cls(n, a)

    @classmethod
    def from_amplitudes(cls, amps) -> "StateVector":
        a = np.asarray(amps, dtype=complex)
        n = int(round(math.log2(a.size)))
        _check_n(n)
        if a.size != 2**n:
            raise ValueError("amplitude count must be a power of two")
        return cls(n, a / np.linalg.norm(a))

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.n, np.outer(self.amps, self.amps.conj()))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    n: int
    rho: np.ndarray

    @classmethod
    def zero(cls, n: int) -> "DensityMatrix":
        return StateVector.zero(n).density()

    @classmethod
    def from_matrix(cls, rho) -> "DensityMatrix":
        r = np.asarray(rho, dtype=complex)
        n = int(round(math.log2(r.shape[0])))
        _check_n(n)
        return cls(n, r)

    def probabilities(self) -> np.ndarray:
        return np.clip(np.diag(self.rho).real, 0.0, None)


def _check_qubit(n: int, q: int) -> None:
    if not 0 <= q < n:
        raise IndexError(f"qubit {q} out of range for {n} qubits")


def _apply_1q_vec(amps: np.ndarray, n: int, m: np.ndarray, q: int) -> np.ndarray:
    t = amps.reshape(2**q, 2, 2 ** (n - q - 1))
    return np.einsum("ij,ajb->aib", m, t).reshape(-1)


def _apply_1q_rho(rho: np.ndarray, n: int, m: np.ndarray, q: int) -> np.ndarray:
    d = 2**n
    t = rho.reshape(2**q, 2, 2 ** (n - q - 1), d)
    t = np.einsum("ij,ajbc->aibc", m, t).reshape(d, d)
    t = t.reshape(d, 2**q, 2, 2 ** (n - q - 1))
    return np.einsum("caib,ji->cajb", t, m.conj()).reshape(d, d)


def apply_unitary(state, u: Unitary2 | np.ndarray, qubit: int):
    m = u.matrix if isinstance(u, Unitary2) else np.asarray(u, dtype=complex)
    _check_qubit(state.n, qubit)
    if isinstance(state, StateVector):
        return StateVector(state.n, _apply_1q_vec(state.amps, state.n, m, qubit))
    return DensityMatrix(state.n, _apply_1q_rho(state.rho, state.n, m, qubit))


def apply_channel(state: DensityMatrix, ch: Channel1Q, qubit: int) -> DensityMatrix:
    if not isinstance(state, DensityMatrix):
        raise TypeError("channels act on density matrices")
    n = state.n
    _check_qubit(n, qubit)
    a, b = 2**qubit, 2 ** (n - qubit - 1)
    t = state.rho.reshape(a, 2, b, a, 2, b)
    out = np.einsum("IJij,xiyujv->xIyuJv", ptm_to_superop(ch.ptm), t)
    return DensityMatrix(n, out.reshape(2**n, 2**n))


def _cnot_perm(n: int, c: int, t: int) -> np.ndarray:
    idx = np.arange(2**n)
    cbit = (idx >> (n - 1 - c)) & 1
    return idx ^ (cbit << (n - 1 - t))


def apply_cnot(state, control: int, target: int):
    _check_qubit(state.n, control)
    _check_qubit(state.n, target)
    if control == target:
        raise ValueError("control and target must differ")
    p = _cnot_perm(state.n, control, target)
    if isinstance(state, StateVector):
        return StateVector(state.n, state.amps[p])
    return DensityMatrix(state.n, state.rho[np.ix_(p, p)])


def apply_word(state, word: GateWord, noise: NoiseModel = NoiseModel(), qubit: int = 0):
    """Apply ``word`` gate by gate under ``noise``.

    State vectors accept only coherent noise; depolarizing noise needs a
    density matrix.
    """
    _check_qubit(state.n, qubit)
    if isinstance(state, StateVector) and not noise.is_unitary:
        raise TypeError("depolarizing noise requires a DensityMatrix")
    gens = word.gateset.generators
    for i in reversed(word.indices):
        u = noisy_unitary(gens[i].unitary, noise)
        state = apply_unitary(state, u, qubit)
        if noise.depolarizing_p:
            state = apply_channel(state, Channel1Q.depolarizing(noise.depolarizing_p), qubit)
    return state


# ---------------------------------------------------------------------------
# metrics


def _rho(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.rho
    if isinstance(x, StateVector):
        return np.outer(x.amps, x.amps.conj())
    return np.asarray(x, dtype=complex)


def trace_distance(a, b) -> float:
    """``||a - b||_1 / 2`` for density matrices (or pure states)."""
    ra, rb = _rho(a), _rho(b)
    if ra.shape != rb.shape:
        raise ValueError(f"dimension mismatch: {ra.shape} vs {rb.shape}")
    return float(0.5 * np.abs(np.linalg.eigvalsh(ra - rb)).sum())


def process_fidelity(ch: Channel1Q, ideal: Unitary2) -> float:
    """Entanglement fidelity ``tr(R_ideal^-1 R_ch) / 4``.

    For an ideal gate followed by ``Rz(a)`` this is ``cos^2(a/2)``.
    """
    r_ideal = Channel1Q.from_unitary(ideal).ptm
    return float(np.trace(r_ideal.T @ ch.ptm) / 4.0)


def state_fidelity(rho, psi) -> float:
    """``<psi| rho |psi>`` for a pure reference state."""
    v = psi.amps if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)
    return float(np.real(v.conj() @ _rho(rho) @ v))
