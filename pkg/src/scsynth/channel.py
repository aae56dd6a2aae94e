"""Single-qubit channels in Pauli-transfer-matrix form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .group import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, Unitary2, rotation_matrix

__all__ = ["Channel1Q", "PAULIS", "ptm_to_superop", "kraus_to_ptm"]

PAULIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)


def kraus_to_ptm(kraus) -> np.ndarray:
    """``R[a, b] = tr(P_a Lambda(P_b)) / 2``."""
    r = np.zeros((4, 4))
    for b, pb in enumerate(PAULIS):
        out = sum(k @ pb @ k.conj().T for k in kraus)
        for a, pa in enumerate(PAULIS):
            r[a, b] = 0.5 * np.trace(pa @ out).real
    return r


def ptm_to_superop(r: np.ndarray) -> np.ndarray:
    """Tensor ``S[i', j', i, j]`` with ``Lambda(rho)[i', j'] = sum S[i', j', i, j] rho[i, j]``."""
    p = np.array(PAULIS)
    return 0.5 * np.einsum("ab,aIJ,bji->IJij", r, p, p)


@dataclass(frozen=True, eq=False)
class Channel1Q:
    """A qubit channel stored as its 4x4 real Pauli transfer matrix."""

    ptm: np.ndarray

    def __post_init__(self):
        m = np.array(self.ptm, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"PTM must be 4x4, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "ptm", m)

    @classmethod
    def identity(cls) -> "Channel1Q":
        return cls(np.eye(4))

    @classmethod
    def from_unitary(cls, u: Unitary2) -> "Channel1Q":
        m = np.eye(4)
        m[1:, 1:] = rotation_matrix(u)
        return cls(m)

    @classmethod
    def from_kraus(cls, kraus) -> "Channel1Q":
        return cls(kraus_to_ptm([np.asarray(k, dtype=complex) for k in kraus]))

    @classmethod
    def depolarizing(cls, p: float) -> "Channel1Q":
        return cls(np.diag([1.0, 1 - p, 1 - p, 1 - p]))

    def then(self, other: "Channel1Q") -> "Channel1Q":
        """``other`` applied after ``self``."""
        return Channel1Q(other.ptm @ self.ptm)

    @property
    def block(self) -> np.ndarray:
        return self.ptm[1:, 1:]

    def choi(self) -> np.ndarray:
        """Choi matrix ``sum_ij |i><j| (x) Lambda(|i><j|)``."""
        s = ptm_to_superop(self.ptm)
        return np.einsum("IJij->iIjJ", s).reshape(4, 4)

    def is_cptp(self, tol: float = 1e-10) -> bool:
        tp = np.allclose(self.ptm[0], (1.0, 0.0, 0.0, 0.0), atol=tol)
        return bool(tp and np.linalg.eigvalsh(self.choi()).min() >= -tol)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return np.einsum("IJij,ij->IJ", ptm_to_superop(self.ptm), rho)

    def __eq__(self, other) -> bool:
        return isinstance(other, Channel1Q) and np.array_equal(self.ptm, other.ptm)

    def __hash__(self) -> int:
        return hash(self.ptm.tobytes())
