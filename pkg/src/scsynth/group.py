"""SU(2) arithmetic on phase-fixed unit quaternions.

An element is stored as ``q = (a, b, c, d)`` with

    U = a*I - i*(b*X + c*Y + d*Z),    a^2 + b^2 + c^2 + d^2 = 1,

so ``U`` is the rotation by ``theta = 2*acos(a)`` about ``(b, c, d)/sin(theta/2)``.
The sign of ``q`` is fixed at construction (first component with magnitude
above ``_SIGN_TOL`` is positive), which pins the global phase: every value
has det 1 and a rotation angle in ``[0, pi]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

__all__ = [
    "Unitary2",
    "AxisAngle",
    "IDENTITY",
    "multiply",
    "dagger",
    "commutator",
    "op_distance",
    "op_distance_raw",
    "frob_distance",
    "to_axis_angle",
    "from_axis_angle",
    "rotation",
    "rz",
    "log_map",
    "exp_map",
    "haar_random",
    "rotation_matrix",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
]

_SIGN_TOL = 1e-12

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _canonical(a: float, b: float, c: float, d: float) -> tuple[float, float, float, float]:
    n = math.sqrt(a * a + b * b + c * c + d * d)
    if n == 0.0:
        raise ValueError("zero quaternion is not a group element")
    if n != 1.0:
        a, b, c, d = a / n, b / n, c / n, d / n
    for x in (a, b, c, d):
        if abs(x) > _SIGN_TOL:
            if x < 0:
                return (-a, -b, -c, -d)
            break
    return (a, b, c, d)


@dataclass(frozen=True)
class Unitary2:
    """An element of SU(2), phase-fixed so equal rotations compare equal."""

    q: tuple[float, float, float, float]

    @classmethod
    def from_quaternion(cls, q) -> "Unitary2":
        a, b, c, d = (float(x) for x in q)
        return cls(_canonical(a, b, c, d))

    @classmethod
    def from_matrix(cls, m) -> "Unitary2":
        """Project a 2x2 unitary (any global phase) onto a canonical SU(2) element."""
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        det = np.linalg.det(m)
        if abs(det) < 1e-12:
            raise ValueError("matrix is singular")
        m = m / np.sqrt(det)
        a = 0.5 * (m[0, 0] + m[1, 1]).real
        d = 0.5 * (m[1, 1] - m[0, 0]).imag
        b = -0.5 * (m[0, 1] + m[1, 0]).imag
        c = 0.5 * (m[1, 0] - m[0, 1]).real
        return cls.from_quaternion((a, b, c, d))

    @classmethod
    def _from_exact_matrix(cls, m) -> "Unitary2":
        # Inverse of `matrix` without arithmetic, so text round trips are bit-exact.
        return cls((float(m[0, 0].real), float(-m[0, 1].imag), float(-m[0, 1].real), float(-m[0, 0].imag)))

    @cached_property
    def matrix(self) -> np.ndarray:
        a, b, c, d = self.q
        return np.array([[complex(a, -d), complex(-c, -b)], [complex(c, -b), complex(a, d)]])

    def __matmul__(self, other: "Unitary2") -> "Unitary2":
        return multiply(self, other)

    def dagger(self) -> "Unitary2":
        return dagger(self)

    def __repr__(self) -> str:
        aa = to_axis_angle(self)
        axis = ", ".join(f"{x:.6g}" for x in aa.axis)
        return f"Unitary2(angle={aa.angle:.6g}, axis=({axis}))"


IDENTITY = Unitary2((1.0, 0.0, 0.0, 0.0))


class AxisAngle(NamedTuple):
    axis: np.ndarray
    angle: float


def multiply(u: Unitary2, v: Unitary2) -> Unitary2:
    """Matrix product ``u @ v`` (``v`` acts first)."""
    a1, b1, c1, d1 = u.q
    a2, b2, c2, d2 = v.q
    return Unitary2(
        _canonical(
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + a2 * b1 + c1 * d2 - d1 * c2,
            a1 * c2 + a2 * c1 + d1 * b2 - b1 * d2,
            a1 * d2 + a2 * d1 + b1 * c2 - c1 * b2,
        )
    )


def dagger(u: Unitary2) -> Unitary2:
    a, b, c, d = u.q
    return Unitary2(_canonical(a, -b, -c, -d))


def commutator(v: Unitary2, w: Unitary2) -> Unitary2:
    """Group commutator ``v w v^dag w^dag``."""
    return multiply(multiply(v, w), multiply(dagger(v), dagger(w)))


def op_distance_raw(u: Unitary2, v: Unitary2) -> float:
    """Operator norm of ``U - V`` for the stored representatives.

    For quaternion matrices every singular value of ``U - V`` equals the
    Euclidean norm of the quaternion difference.
    """
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(u.q, v.q)))


def op_distance(u: Unitary2, v: Unitary2) -> float:
    """Operator-norm distance minimized over global phase.

    Equals ``2*sin(theta/4)`` where ``theta`` is the rotation angle of ``u v^dag``.
    """
    s = t = 0.0
    for x, y in zip(u.q, v.q):
        s += (x - y) ** 2
        t += (x + y) ** 2
    return math.sqrt(min(s, t))


def frob_distance(u: Unitary2, v: Unitary2) -> float:
    """Raw Frobenius norm ``||U - V||_F`` of the phase-fixed matrices."""
    return math.sqrt(2.0) * op_distance_raw(u, v)


def to_axis_angle(u: Unitary2) -> AxisAngle:
    """Rotation axis and angle; the axis is ``(0, 0, 1)`` when the angle is 0."""
    a, b, c, d = u.q
    s = math.sqrt(b * b + c * c + d * d)
    if s < 1e-15:
        return AxisAngle(np.array([0.0, 0.0, 1.0]), 0.0)
    angle = 2.0 * math.atan2(s, a)
    return AxisAngle(np.array([b / s, c / s, d / s]), angle)


def from_axis_angle(axis, angle: float) -> Unitary2:
    axis = np.asarray(axis, dtype=float)
    n = float(np.linalg.norm(axis))
    if n == 0.0:
        if angle % (2 * math.pi) == 0.0:
            return IDENTITY
        raise ValueError("rotation axis must be nonzero")
    h = 0.5 * angle
    s = math.sin(h) / n
    return Unitary2.from_quaternion((math.cos(h), axis[0] * s, axis[1] * s, axis[2] * s))


rotation = from_axis_angle


def rz(theta: float) -> Unitary2:
    """``exp(-i theta Z / 2)``."""
    return from_axis_angle((0.0, 0.0, 1.0), theta)


def log_map(u: Unitary2) -> np.ndarray:
    """Rotation vector ``angle * axis`` of ``u`` (so ``u = exp(-i v.sigma/2)``).

    The stored sign makes the angle lie in ``[0, pi]``; at exactly ``pi`` the
    branch is the one selected by the canonical sign rule.
    """
    axis, angle = to_axis_angle(u)
    return angle * axis


def exp_map(v) -> Unitary2:
    v = np.asarray(v, dtype=float)
    theta = float(np.linalg.norm(v))
    if theta == 0.0:
        return IDENTITY
    return from_axis_angle(v / theta, theta)


def haar_random(rng: np.random.Generator) -> Unitary2:
    """Haar-distributed element via a Gaussian 4-vector."""
    while True:
        v = rng.normal(size=4)
        n = float(np.linalg.norm(v))
        if n > 1e-9:
            return Unitary2.from_quaternion(v / n)


def rotation_matrix(u: Unitary2) -> np.ndarray:
    """SO(3) matrix of ``u`` acting on Bloch vectors (the 3x3 Pauli-transfer block)."""
    a, b, c, d = u.q
    return np.array(
        [
            [1 - 2 * (c * c + d * d), 2 * (b * c - a * d), 2 * (b * d + a * c)],
            [2 * (b * c + a * d), 1 - 2 * (b * b + d * d), 2 * (c * d - a * b)],
            [2 * (b * d - a * c), 2 * (c * d + a * b), 1 - 2 * (b * b + c * c)],
        ]
    )
