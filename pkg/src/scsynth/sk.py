"""Dawson-Nielsen Solovay-Kitaev recursion with a balanced group commutator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .group import (
    IDENTITY,
    Unitary2,
    commutator,
    dagger,
    from_axis_angle,
    haar_random,
    multiply,
    op_distance,
    to_axis_angle,
)
from .net import EpsilonNet, nearest
from .words import GateWord, concat

__all__ = [
    "GCDomainError",
    "ContractionError",
    "SynthesisError",
    "SkParams",
    "LevelRecord",
    "Calibration",
    "gc_decompose",
    "balance_angle",
    "sk_synthesize",
    "synth_trace",
    "synthesize_to",
    "calibrate",
    "depth_for",
    "fit_contraction",
    "commutator_perturbation_bound",
    "contraction_bound",
    "GC_DOMAIN",
    "MAX_DEPTH",
]

GC_DOMAIN = 0.5
MAX_DEPTH = 30


class GCDomainError(ValueError):
    """Residual too far from the identity for the principal-branch decomposition."""


class ContractionError(ValueError):
    """The net is too coarse for the recursion to start contracting."""


class SynthesisError(RuntimeError):
    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class SkParams:
    depth: int
    net: EpsilonNet

    def __post_init__(self):
        if not 0 <= self.depth <= MAX_DEPTH:
            raise ValueError(f"depth must be in [0, {MAX_DEPTH}]")
        if self.depth > 0 and not self.net.coverage < GC_DOMAIN:
            raise ContractionError(
                f"net covering radius {self.net.coverage:.3g} is outside the commutator domain "
                f"{GC_DOMAIN}; build a finer net (larger max_len)"
            )


class LevelRecord(NamedTuple):
    level: int
    residual: float
    length: int
    sub_length: int  # longest level-(k-1) word used at this level; 0 at the base
    sub_residual: float  # worst of the V and W approximation errors; 0 at the base


def balance_angle(theta: float) -> float:
    """Rotation angle ``phi`` of V and W whose x/y commutator has angle ``theta``.

    Solves ``sin(theta/2) = 2 s^2 sqrt(1 - s^4)`` with ``s = sin(phi/2)`` on
    the branch through the origin, where ``s^2 = sin(theta/4)`` (written
    this way to avoid cancellation at tiny angles).
    """
    return 2.0 * math.asin(math.sqrt(max(0.0, math.sin(0.25 * theta))))


def _align(src: np.ndarray, dst: np.ndarray) -> Unitary2:
    """Minimal rotation taking unit vector ``src`` to ``dst``."""
    c = float(np.dot(src, dst))
    ax = np.cross(src, dst)
    s = float(np.linalg.norm(ax))
    if s < 1e-15:
        if c > 0:
            return IDENTITY
        perp = np.cross(src, (1.0, 0.0, 0.0))
        if np.linalg.norm(perp) < 1e-6:
            perp = np.cross(src, (0.0, 1.0, 0.0))
        return from_axis_angle(perp, math.pi)
    return from_axis_angle(ax, math.atan2(s, c))


def gc_decompose(delta: Unitary2) -> tuple[Unitary2, Unitary2]:
    """Balanced ``(V, W)`` with ``V W V^dag W^dag = delta``.

    V and W are equal-angle rotations about orthogonal axes, conjugated so
    that their commutator's axis lines up with that of ``delta``.
    """
    d = op_distance(delta, IDENTITY)
    if d >= GC_DOMAIN:
        raise GCDomainError(f"residual distance {d:.4g} >= {GC_DOMAIN}")
    axis, theta = to_axis_angle(delta)
    if theta == 0.0:
        return IDENTITY, IDENTITY
    phi = balance_angle(theta)
    v = from_axis_angle((1.0, 0.0, 0.0), phi)
    w = from_axis_angle((0.0, 1.0, 0.0), phi)
    c_axis, _ = to_axis_angle(commutator(v, w))
    s = _align(c_axis, axis)
    sd = dagger(s)
    return multiply(multiply(s, v), sd), multiply(multiply(s, w), sd)


def _chain(target: Unitary2, n: int, net: EpsilonNet) -> tuple[list[GateWord], list[tuple[int, float]]]:
    """Words ``U_0 .. U_n`` for ``target``; per level, the longest sub-word and worst factor error."""
    if n == 0:
        return [nearest(net, target, 1)[0][0]], [(0, 0.0)]
    words, subs = _chain(target, n - 1, net)
    prev = words[-1]
    v, w = gc_decompose(multiply(target, dagger(prev.unitary)))
    vw = _chain(v, n - 1, net)[0][-1]
    ww = _chain(w, n - 1, net)[0][-1]
    words.append(concat(vw, ww, vw.inverse(), ww.inverse(), prev))
    subs.append((max(len(vw), len(ww), len(prev)), max(op_distance(vw.unitary, v), op_distance(ww.unitary, w))))
    return words, subs


def sk_synthesize(target: Unitary2, params: SkParams) -> GateWord:
    """Depth-``params.depth`` Solovay-Kitaev approximation of ``target``."""
    return _chain(target, params.depth, params.net)[0][-1]


def synth_trace(target: Unitary2, params: SkParams) -> list[LevelRecord]:
    words, subs = _chain(target, params.depth, params.net)
    return [
        LevelRecord(k, op_distance(w.unitary, target), len(w), s, e)
        for k, (w, (s, e)) in enumerate(zip(words, subs))
    ]


# ---------------------------------------------------------------------------
# contraction constants and depth selection


def commutator_perturbation_bound(a: float, delta: float) -> float:
    """Bound on ``||[V', W'] - [V, W]||`` for ``||V - I||, ||W - I|| <= a`` and
    perturbations ``||V' - V||, ||W' - W|| <= delta`` (Dawson-Nielsen)."""
    return 8 * a * delta + 4 * a * delta**2 + 8 * delta**2 + 4 * delta**3


def _balanced_factor_distance(r: float) -> float:
    # ||V - I|| for the balanced factors of a residual at distance r.
    theta = 4.0 * math.asin(min(1.0, r / 2.0))
    return 2.0 * math.sin(balance_angle(theta) / 4.0)


def contraction_bound(r0: float) -> float:
    """Constant ``C`` in ``eps_k <= C eps_{k-1}^{3/2}`` valid for residuals up to ``r0``."""
    a = _balanced_factor_distance(r0)
    return commutator_perturbation_bound(a, r0) / r0**1.5


def fit_contraction(residual_rows, floor: float = 1e-12) -> float:
    """Smallest ``C`` with ``r_k <= C r_{k-1}^{3/2}`` over all rows and levels."""
    c = 0.0
    for row in residual_rows:
        for prev, cur in zip(row, row[1:]):
            if prev > floor:
                c = max(c, cur / prev**1.5)
    return c


@dataclass(frozen=True)
class Calibration:
    """Worst residual per depth over a fixed probe set, and its contraction constant."""

    envelope: tuple[float, ...]
    constant: float

    def predicted(self, depth: int) -> float:
        if depth < len(self.envelope):
            return self.envelope[depth]
        eps = self.envelope[-1]
        for _ in range(depth - len(self.envelope) + 1):
            eps = self.constant * eps**1.5
        return eps


_CALIBRATIONS: dict[tuple, Calibration] = {}

CALIBRATION_TARGETS = 16
CALIBRATION_DEPTH = 5
CALIBRATION_SEED = 7


def calibrate(net: EpsilonNet, n_targets: int = CALIBRATION_TARGETS, max_depth: int = CALIBRATION_DEPTH) -> Calibration:
    key = (net.gateset.fingerprint(), len(net), net.eps0, net.k_reps, net.max_len, n_targets, max_depth)
    cal = _CALIBRATIONS.get(key)
    if cal is None:
        rng = np.random.default_rng(CALIBRATION_SEED)
        rows = []
        for _ in range(n_targets):
            t = haar_random(rng)
            words, _ = _chain(t, max_depth, net)
            rows.append([op_distance(w.unitary, t) for w in words])
        env = tuple(float(max(col)) for col in zip(*rows))
        cal = Calibration(env, max(fit_contraction(rows), 1e-300))
        _CALIBRATIONS[key] = cal
    return cal


def depth_for(eps: float, net: EpsilonNet, margin: float = 1.5) -> int:
    """Smallest depth whose calibrated worst-case residual, times ``margin``, is <= eps."""
    cal = calibrate(net)
    for depth in range(MAX_DEPTH + 1):
        if cal.predicted(depth) * margin <= eps:
            return depth
    raise ContractionError(f"no depth up to {MAX_DEPTH} is predicted to reach eps={eps:g}")


def synthesize_to(target: Unitary2, eps: float, net: EpsilonNet, depth: int | None = None) -> GateWord:
    """Deterministic synthesis meeting ``eps``, deepening past the predicted depth if needed."""
    depth = depth_for(eps, net) if depth is None else depth
    best = math.inf
    for d in range(depth, min(depth + 3, MAX_DEPTH) + 1):
        word = sk_synthesize(target, SkParams(d, net))
        best = op_distance(word.unitary, target)
        if best <= eps:
            return word
    raise SynthesisError(f"deterministic synthesis reached {best:.3g} > eps={eps:g}", best)
