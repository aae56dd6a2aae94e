"""Stochastic commutator synthesis: Gibbs-sampled commutator pairs with annealing.

The recursion mirrors :mod:`scsynth.sk`, but at every node a commutator pair
is drawn from a finite candidate list with probability proportional to
``exp(-energy / T)``, and the base case samples among the K nearest net
entries the same way. Temperatures follow ``T0 * beta**level`` with
``level`` counted from the top call, so the base of a depth-n recursion is
the coldest point.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple, Sequence

import numpy as np

from .group import (
    IDENTITY,
    Unitary2,
    commutator,
    dagger,
    from_axis_angle,
    frob_distance,
    log_map,
    multiply,
    op_distance,
    to_axis_angle,
)
from .net import EpsilonNet, default_net, nearest
from .sk import MAX_DEPTH, depth_for, gc_decompose
from .words import GateWord, concat

__all__ = [
    "ScsConfig",
    "CandidatePair",
    "ScsLevel",
    "ScsRun",
    "EnsembleResult",
    "ScsAccuracyError",
    "EnsembleRunError",
    "temperature",
    "propose_candidates",
    "gibbs_sample",
    "gibbs_index",
    "scs_synthesize",
    "ensemble_synthesize",
    "derive_seed",
    "splitmix64",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ScsConfig:
    """Hyperparameters of one SCS synthesis (and of an ensemble of them).

    ``depth=None`` picks the smallest calibrated depth reaching ``eps_target``.
    ``jitter`` scales the random conjugation angle (``jitter * sqrt(r)``) and
    ``budget`` the rejection threshold (``budget * r**1.5``) for a residual
    at distance ``r``.
    """

    eps_target: float = 2.0**-8
    k_reps: int = 12
    ensemble_size: int = 16
    t0: float = 0.1
    beta: float = 0.7
    mcmc_steps: int = 0
    master_seed: int = 0
    depth: int | None = None
    jitter: float = 0.1
    budget: float = 0.5

    def __post_init__(self):
        if not self.eps_target > 0:
            raise ValueError("eps_target must be positive")
        if self.k_reps < 1 or self.ensemble_size < 1:
            raise ValueError("k_reps and ensemble_size must be >= 1")
        if self.t0 < 0:
            raise ValueError("t0 must be >= 0")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.mcmc_steps < 0:
            raise ValueError("mcmc_steps must be >= 0")
        if self.depth is not None and not 0 <= self.depth <= MAX_DEPTH:
            raise ValueError(f"depth must be in [0, {MAX_DEPTH}]")
        if not 0.5 < self.beta < 0.9:
            warnings.warn(f"cooling factor beta={self.beta} is outside the usual range (0.5, 0.9)", stacklevel=3)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScsConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)


class CandidatePair(NamedTuple):
    v: Unitary2
    w: Unitary2
    energy: float


class ScsLevel(NamedTuple):
    level: int
    residual: np.ndarray  # log of U_k * target^dag
    length: int
    sub_length: int
    temperature: float


class ScsRun(NamedTuple):
    word: GateWord
    trace: list[ScsLevel]
    retried: bool = False


@dataclass(frozen=True)
class EnsembleResult:
    words: tuple[GateWord, ...]
    per_run_residuals: tuple[np.ndarray, ...]
    config_echo: ScsConfig
    retries: int = 0

    def mean_residual(self) -> np.ndarray:
        return np.mean(self.per_run_residuals, axis=0)


class ScsAccuracyError(RuntimeError):
    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


class EnsembleRunError(RuntimeError):
    def __init__(self, run_index: int, cause: Exception):
        super().__init__(f"ensemble run {run_index} failed: {cause}")
        self.run_index = run_index
        self.cause = cause


# ---------------------------------------------------------------------------
# seeds


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, run_index: int) -> int:
    """Per-run seed: ``splitmix64(splitmix64(master) ^ index)``."""
    return splitmix64(splitmix64(master_seed & _MASK64) ^ (run_index & _MASK64))


# ---------------------------------------------------------------------------
# sampling primitives


def temperature(level: int, cfg: ScsConfig) -> float:
    return cfg.t0 * cfg.beta**level


def gibbs_index(energies: Sequence[float], temp: float, rng: np.random.Generator) -> int:
    """Index drawn with probability proportional to ``exp(-energy / temp)``.

    ``temp == 0`` returns the argmin (lowest index on ties) without touching ``rng``.
    """
    e = np.asarray(energies, dtype=float)
    if e.size == 0:
        raise ValueError("need at least one candidate")
    if temp == 0:
        return int(np.argmin(e))
    logits = -(e - e.min()) / temp
    p = np.exp(logits - np.logaddexp.reduce(logits))
    return int(rng.choice(e.size, p=p / p.sum()))


def gibbs_sample(delta: Unitary2, candidates: Sequence[CandidatePair], temp: float, rng) -> CandidatePair:
    return candidates[gibbs_index([c.energy for c in candidates], temp, rng)]


def _conjugate(s: Unitary2, u: Unitary2) -> Unitary2:
    return multiply(multiply(s, u), dagger(s))


def _pair(delta: Unitary2, v: Unitary2, w: Unitary2) -> CandidatePair:
    return CandidatePair(v, w, frob_distance(delta, commutator(v, w)))


def _random_axis(rng: np.random.Generator) -> np.ndarray:
    while True:
        a = rng.normal(size=3)
        n = float(np.linalg.norm(a))
        if n > 1e-9:
            return a / n


def propose_candidates(
    delta: Unitary2,
    count: int,
    rng: np.random.Generator,
    *,
    jitter: float = 0.1,
    budget: float = 0.5,
    max_tries: int | None = None,
) -> list[CandidatePair]:
    """Candidate commutator pairs for ``delta``; entry 0 is the balanced pair.

    Others are the balanced pair conjugated by a random rotation about
    ``delta``'s axis (an exact family) composed with a small random
    rotation of angle ``~ N(0, (jitter*sqrt(r))^2)``. Candidates whose
    commutator misses ``delta`` by more than ``budget * r**1.5`` are
    rejected and redrawn. Fewer than ``count`` pairs come back only if
    ``max_tries`` draws are exhausted.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    v0, w0 = gc_decompose(delta)
    out = [_pair(delta, v0, w0)]
    if count == 1:
        return out
    r = op_distance(delta, IDENTITY)
    axis, _ = to_axis_angle(delta)
    sigma = jitter * math.sqrt(r)
    limit = budget * r**1.5
    tries = 0
    max_tries = 20 * count if max_tries is None else max_tries
    while len(out) < count and tries < max_tries:
        tries += 1
        frame = from_axis_angle(axis, rng.uniform(0.0, 2.0 * math.pi))
        j = rng.normal() * sigma
        s = multiply(from_axis_angle(_random_axis(rng), j), frame) if j != 0.0 else frame
        v, w = _conjugate(s, v0), _conjugate(s, w0)
        if op_distance(commutator(v, w), delta) <= limit:
            out.append(_pair(delta, v, w))
    return out


def _refine(delta: Unitary2, pair: CandidatePair, temp: float, steps: int, cfg: ScsConfig, rng) -> CandidatePair:
    # Metropolis walk on small conjugations, restricted to the quality gate.
    if steps == 0 or temp == 0:
        return pair
    r = op_distance(delta, IDENTITY)
    sigma = cfg.jitter * math.sqrt(r)
    limit = cfg.budget * r**1.5
    cur = pair
    for _ in range(steps):
        s = from_axis_angle(_random_axis(rng), rng.normal() * sigma)
        v, w = _conjugate(s, cur.v), _conjugate(s, cur.w)
        if op_distance(commutator(v, w), delta) > limit:
            continue
        prop = _pair(delta, v, w)
        if rng.random() < math.exp(min(0.0, -(prop.energy - cur.energy) / temp)):
            cur = prop
    return cur


# ---------------------------------------------------------------------------
# recursion


class _Ctx(NamedTuple):
    cfg: ScsConfig
    net: EpsilonNet
    depth: int
    cold: bool


def _temp(ctx: _Ctx, n: int) -> float:
    return 0.0 if ctx.cold else temperature(ctx.depth - n, ctx.cfg)


def _lift(target: Unitary2, n: int, ctx: _Ctx, rng, trace: list | None) -> GateWord:
    temp = _temp(ctx, n)
    if n == 0:
        reps = nearest(ctx.net, target, ctx.cfg.k_reps)
        word = reps[gibbs_index([frob_distance(target, w.unitary) for w, _ in reps], temp, rng)][0]
        if trace is not None:
            trace.append((word, 0, temp))
        return word
    prev = _lift(target, n - 1, ctx, rng, trace)
    delta = multiply(target, dagger(prev.unitary))
    cands = propose_candidates(delta, ctx.cfg.k_reps, rng, jitter=ctx.cfg.jitter, budget=ctx.cfg.budget)
    pair = _refine(delta, gibbs_sample(delta, cands, temp, rng), temp, ctx.cfg.mcmc_steps, ctx.cfg, rng)
    vw = _lift(pair.v, n - 1, ctx, rng, None)
    ww = _lift(pair.w, n - 1, ctx, rng, None)
    word = concat(vw, ww, vw.inverse(), ww.inverse(), prev)
    if trace is not None:
        trace.append((word, max(len(vw), len(ww), len(prev)), temp))
    return word


def _resolve(cfg: ScsConfig, net: EpsilonNet | None) -> tuple[EpsilonNet, int]:
    net = default_net() if net is None else net
    depth = depth_for(cfg.eps_target, net) if cfg.depth is None else cfg.depth
    return net, depth


def _run(target: Unitary2, ctx: _Ctx, rng) -> tuple[GateWord, list]:
    raw: list = []
    word = _lift(target, ctx.depth, ctx, rng, raw)
    return word, raw


def scs_synthesize(target: Unitary2, cfg: ScsConfig, run_seed: int, net: EpsilonNet | None = None) -> ScsRun:
    """One stochastic synthesis of ``target`` meeting ``cfg.eps_target``.

    A run that misses the target is repeated once fully cold (every
    temperature 0); a second miss raises :class:`ScsAccuracyError`.
    """
    net, depth = _resolve(cfg, net)
    rng = np.random.default_rng(run_seed & _MASK64)
    ctx = _Ctx(cfg, net, depth, False)
    word, raw = _run(target, ctx, rng)
    retried = False
    if op_distance(word.unitary, target) > cfg.eps_target:
        retried = True
        word, raw = _run(target, ctx._replace(cold=True), rng)
        achieved = op_distance(word.unitary, target)
        if achieved > cfg.eps_target:
            raise ScsAccuracyError(
                f"SCS reached {achieved:.3g} > eps={cfg.eps_target:g} at depth {depth} after a cold retry",
                achieved,
            )
    trace = [
        ScsLevel(k, log_map(multiply(w.unitary, dagger(target))), len(w), sub, t)
        for k, (w, sub, t) in enumerate(raw)
    ]
    return ScsRun(word, trace, retried)


_WORKER: dict = {}


def _worker_init(net: EpsilonNet) -> None:
    _WORKER["net"] = net


def _ensemble_member(args) -> ScsRun:
    target, cfg, index = args
    try:
        return scs_synthesize(target, cfg, derive_seed(cfg.master_seed, index), _WORKER["net"])
    except Exception as exc:  # noqa: BLE001 - re-raised with the run index
        raise EnsembleRunError(index, exc) from exc


def ensemble_synthesize(
    target: Unitary2, cfg: ScsConfig, net: EpsilonNet | None = None, jobs: int = 1
) -> EnsembleResult:
    """``cfg.ensemble_size`` independently seeded runs, assembled in run order.

    Serial and parallel execution give identical results since every run
    draws only from its own derived seed.
    """
    net, depth = _resolve(cfg, net)
    if cfg.depth is None:
        cfg = ScsConfig(**{**cfg.to_dict(), "depth": depth})
    tasks = [(target, cfg, i) for i in range(cfg.ensemble_size)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_worker_init, initargs=(net,)) as pool:
            runs = list(pool.map(_ensemble_member, tasks))
    else:
        _worker_init(net)
        runs = [_ensemble_member(t) for t in tasks]
    return EnsembleResult(
        tuple(r.word for r in runs),
        tuple(r.trace[-1].residual for r in runs),
        cfg,
        sum(r.retried for r in runs),
    )
