"""Experiment drivers shared by the CLI, the scripts and the acceptance suite.

Every driver is a deterministic function of its arguments: targets come
from ``np.random.default_rng(seed)`` and every per-item random stream from
``derive_seed(seed, index)``, so results do not depend on ``jobs``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .forrelation import build_circuit, compile_circuit, decompose_circuit, sample_instance, score
from .group import Unitary2, haar_random, op_distance, rz
from .net import EpsilonNet, default_net
from .rc import average_channel, split_error, word_channel
from .scs import ScsConfig, derive_seed, ensemble_synthesize, scs_synthesize
from .sim import NoiseModel, StateVector, apply_unitary, apply_word, trace_distance
from .sk import SkParams, depth_for, synth_trace, synthesize_to
from .words import GateWord

__all__ = [
    "SlopeFit",
    "fit_slope",
    "pmap",
    "dense_distance",
    "scaling_sweep",
    "rc_experiment",
    "cancellation_experiment",
    "forrelation_experiment",
]

# ---------------------------------------------------------------------------
# plumbing

_STATE: dict = {}


def _init(net: EpsilonNet) -> None:
    if _STATE.get("net") is not net:
        _STATE.clear()
    _STATE["net"] = net


def _net() -> EpsilonNet:
    return _STATE.get("net") or default_net()


def pmap(fn: Callable, items: Sequence, jobs: int = 1, net: EpsilonNet | None = None) -> list:
    """Ordered map, in worker processes when ``jobs > 1``.

    ``fn`` must be a module-level function; ``net`` is installed in every
    worker and read back with :func:`_net`.
    """
    net = default_net() if net is None else net
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init, initargs=(net,)) as pool:
            return list(pool.map(fn, items))
    _init(net)
    return [fn(x) for x in items]


def dense_distance(word: GateWord, target: Unitary2 | np.ndarray) -> float:
    """Projective operator distance recomputed from dense generator matrices.

    Independent of the quaternion path: multiplies 2x2 complex matrices and
    uses ``sqrt(2 - |tr(A^dag B)|)`` (valid for determinant-1 matrices).
    """
    m = np.eye(2, dtype=complex)
    for i in word.indices:
        m = m @ word.gateset.generators[i].unitary.matrix
    t = target.matrix if isinstance(target, Unitary2) else np.asarray(target, dtype=complex)
    t = t / np.sqrt(np.linalg.det(t))
    m = m / np.sqrt(np.linalg.det(m))
    return float(math.sqrt(max(0.0, 2.0 - abs(np.trace(t.conj().T @ m)))))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    ci95: tuple[float, float]
    points: int

    @property
    def ci_width(self) -> float:
        return self.ci95[1] - self.ci95[0]

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "ci95": list(self.ci95), "points": self.points}


def fit_slope(x: Sequence[float], y: Sequence[float]) -> SlopeFit:
    """Least-squares slope with a two-sided 95% t interval."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 points for a slope with a confidence interval")
    r = stats.linregress(x, y)
    half = float(stats.t.ppf(0.975, x.size - 2) * r.stderr)
    return SlopeFit(float(r.slope), float(r.intercept), (float(r.slope) - half, float(r.slope) + half), int(x.size))


# ---------------------------------------------------------------------------
# word-length scaling


def _scaling_item(args):
    mode, target, depth, cfg, seed = args
    net = _net()
    if mode == "sk":
        trace = synth_trace(target, SkParams(depth, net))
        return [(r.residual, r.length, r.sub_length) for r in trace]
    run = scs_synthesize(target, replace(cfg, depth=depth), seed, net)
    # Rotation angle a of the residual corresponds to distance 2 sin(a/4).
    return [(2.0 * math.sin(float(np.linalg.norm(lv.residual)) / 4.0), lv.length, lv.sub_length) for lv in run.trace]


def scaling_sweep(
    mode: str,
    depths: Sequence[int],
    n_targets: int = 20,
    seed: int = 0,
    *,
    cfg: ScsConfig | None = None,
    net: EpsilonNet | None = None,
    jobs: int = 1,
) -> dict:
    """Achieved accuracy and word length per depth, and the fitted exponent.

    Per depth, ``eps`` is the geometric mean of achieved distances and
    ``mean_length`` the arithmetic mean length over ``n_targets`` Haar
    targets. The slope regresses ``log(mean_length)`` on
    ``log(log(1/eps))`` across depths. One synthesis per target at the
    deepest depth supplies every shallower level, since the recursion
    computes them on the way.
    """
    depths = sorted(set(int(d) for d in depths))
    if len(depths) < 3:
        raise ValueError("a scaling sweep needs at least 3 depths")
    if mode not in ("sk", "scs"):
        raise ValueError("mode must be 'sk' or 'scs'")
    net = default_net() if net is None else net
    # Accuracy is measured here, not enforced.
    cfg = replace(cfg or ScsConfig(), eps_target=2.0)
    rng = np.random.default_rng(seed)
    targets = [haar_random(rng) for _ in range(n_targets)]
    top = depths[-1]
    items = [(mode, t, top, cfg, derive_seed(seed, i)) for i, t in enumerate(targets)]
    per_target = pmap(_scaling_item, items, jobs, net)
    rows = []
    for d in depths:
        res = np.array([pt[d][0] for pt in per_target])
        lens = np.array([pt[d][1] for pt in per_target])
        rows.append(
            {
                "depth": d,
                "eps": float(np.exp(np.mean(np.log(np.maximum(res, 1e-300))))),
                "eps_max": float(res.max()),
                "mean_length": float(lens.mean()),
            }
        )
    fit = fit_slope([math.log(math.log(1.0 / r["eps"])) for r in rows], [math.log(r["mean_length"]) for r in rows])
    bound_ok = all(
        pt[k][1] <= 5 * pt[k][2] + net.longest for pt in per_target for k in range(1, len(pt))
    )
    return {"mode": mode, "rows": rows, "fit": fit.to_dict(), "length_bound_holds": bound_ok, "targets": n_targets}


# ---------------------------------------------------------------------------
# trace distance and coherent-error experiment

_PLUS = StateVector.from_amplitudes([1.0, 1.0])


def _rc_item(args):
    theta, cfg, alpha = args
    net = _net()
    u = rz(theta)
    det = synthesize_to(u, cfg.eps_target, net, cfg.depth)
    ens = ensemble_synthesize(u, cfg, net)
    ideal = apply_unitary(_PLUS, u, 0).density()
    td_det = trace_distance(ideal, apply_word(_PLUS, det).density())
    rho_ens = np.mean([apply_word(_PLUS, w).density().rho for w in ens.words], axis=0)
    td_scs = trace_distance(ideal, rho_ens)
    noise = NoiseModel(alpha)
    out = {
        "theta": theta,
        "det_length": len(det),
        "det_distance": op_distance(det.unitary, u),
        "det_distance_dense": dense_distance(det, u),
        "scs_mean_length": float(np.mean([len(w) for w in ens.words])),
        "scs_max_distance": max(op_distance(w.unitary, u) for w in ens.words),
        "scs_retries": ens.retries,
        "td_det": td_det,
        "td_scs": td_scs,
    }
    for tag, nm in (("noiseless", NoiseModel()), ("noisy", noise)):
        d = split_error(word_channel(det, nm), u)
        s = split_error(average_channel(ens.words, nm, twirl=True), u)
        s_raw = split_error(average_channel(ens.words, nm, twirl=False), u)
        out[f"{tag}_det_coherent"] = d.coherent_angle
        out[f"{tag}_det_incoherent"] = d.incoherent_infidelity
        out[f"{tag}_scs_coherent"] = s.coherent_angle
        out[f"{tag}_scs_incoherent"] = s.incoherent_infidelity
        out[f"{tag}_scs_untwirled_coherent"] = s_raw.coherent_angle
    return out


def rc_experiment(
    n_angles: int = 100,
    cfg: ScsConfig | None = None,
    alpha: float = 0.01,
    seed: int = 0,
    *,
    net: EpsilonNet | None = None,
    jobs: int = 1,
) -> dict:
    """Deterministic word vs SCS ensemble on ``Rz(theta)``, ``theta`` uniform in ``[0, 2 pi)``.

    Trace distances use input ``|+>`` without noise. Coherent angles are
    taken from the error split of each channel, with the ensemble channel
    Pauli-twirled per gate (and, for reference, untwirled).
    """
    net = default_net() if net is None else net
    cfg = cfg or ScsConfig()
    if cfg.depth is None:
        cfg = replace(cfg, depth=depth_for(cfg.eps_target, net))
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(0.0, 2.0 * math.pi, size=n_angles)
    items = [(float(t), replace(cfg, master_seed=derive_seed(seed, i)), alpha) for i, t in enumerate(thetas)]
    recs = pmap(_rc_item, items, jobs, net)

    def mean(key):
        return float(np.mean([r[key] for r in recs]))

    det_coh, scs_coh, raw_coh = mean("noisy_det_coherent"), mean("noisy_scs_coherent"), mean("noisy_scs_untwirled_coherent")
    summary = {
        "td_det_mean": mean("td_det"),
        "td_scs_mean": mean("td_scs"),
        "td_ratio": mean("td_det") / mean("td_scs"),
        "noisy_det_coherent_mean": det_coh,
        "noisy_scs_coherent_mean": scs_coh,
        "noisy_scs_untwirled_coherent_mean": raw_coh,
        "coherent_reduction": 1.0 - scs_coh / det_coh,
        "coherent_reduction_untwirled": 1.0 - raw_coh / det_coh,
        "noiseless_det_coherent_mean": mean("noiseless_det_coherent"),
        "noiseless_scs_coherent_mean": mean("noiseless_scs_coherent"),
        "length_ratio": mean("scs_mean_length") / mean("det_length"),
        "all_members_meet_eps": all(r["scs_max_distance"] <= cfg.eps_target for r in recs),
        "total_retries": int(sum(r["scs_retries"] for r in recs)),
    }
    return {"config": cfg.to_dict(), "alpha": alpha, "records": recs, "summary": summary}


def _cancel_item(args):
    target, cfg, ks = args
    ens = ensemble_synthesize(target, replace(cfg, ensemble_size=max(ks)), _net())
    out = {}
    for k in ks:
        ch = average_channel(ens.words[:k])
        out[k] = {
            "coherent_angle": split_error(ch, target).coherent_angle,
            "mean_residual_norm": float(np.linalg.norm(np.mean(ens.per_run_residuals[:k], axis=0))),
        }
    return out


def cancellation_experiment(
    n_targets: int = 20,
    ks: Sequence[int] = (4, 8, 16, 32, 64),
    cfg: ScsConfig | None = None,
    seed: int = 0,
    *,
    net: EpsilonNet | None = None,
    jobs: int = 1,
) -> dict:
    """Coherent angle of the noiseless K'-member average channel versus K'.

    Each target uses one ensemble of ``max(ks)`` runs and its prefixes.
    The slope fits ``log(mean angle)`` against ``log K'``.
    """
    net = default_net() if net is None else net
    cfg = cfg or ScsConfig()
    if cfg.depth is None:
        cfg = replace(cfg, depth=depth_for(cfg.eps_target, net))
    ks = sorted(ks)
    rng = np.random.default_rng(seed)
    items = [(haar_random(rng), replace(cfg, master_seed=derive_seed(seed, i)), ks) for i in range(n_targets)]
    per = pmap(_cancel_item, items, jobs, net)
    ang = [float(np.mean([p[k]["coherent_angle"] for p in per])) for k in ks]
    res = [float(np.mean([p[k]["mean_residual_norm"] for p in per])) for k in ks]
    lk = np.log(ks)
    return {
        "config": cfg.to_dict(),
        "ks": list(ks),
        "mean_coherent_angle": ang,
        "mean_residual_norm": res,
        "fit": fit_slope(lk, np.log(ang)).to_dict(),
        "residual_fit": fit_slope(lk, np.log(res)).to_dict(),
    }


# ---------------------------------------------------------------------------
# Forrelation


def _forr_item(args):
    inst, eps, alpha, cfg, rc_scope = args
    circ = decompose_circuit(build_circuit(inst), inst)
    net = _net()
    cache = _STATE.setdefault("word_cache", {})
    cd = compile_circuit(circ, "deterministic", eps, net=net, cfg=cfg, cache=cache)
    cs = compile_circuit(circ, "scs", eps, net=net, cfg=cfg, rc_scope=rc_scope, cache=cache)
    noise = NoiseModel(alpha)
    sd, ss = score(cd, inst, noise), score(cs, inst, noise)
    nd, ns = score(cd, inst), score(cs, inst)
    per_gate = [max(op_distance(w.unitary, rz(op.angle)) for w in op.words) for op in cd.ops if op.kind == "word"]
    per_gate_s = [max(op_distance(w.unitary, rz(op.angle)) for w in op.words) for op in cs.ops if op.kind == "word"]
    return {
        "phi": inst.phi,
        "rz_count": cd.count("word"),
        "t_count_det": cd.t_count(),
        "t_count_scs": cs.t_count(),
        "det": sd.to_dict(),
        "scs": ss.to_dict(),
        "noiseless_tv_det": nd.total_variation,
        "noiseless_tv_scs": ns.total_variation,
        "tv_bound_det": float(sum(per_gate)),
        "tv_bound_scs": float(sum(per_gate_s)),
        "eps_bound": eps * cd.count("word"),
    }


def forrelation_experiment(
    n: int = 3,
    k: int = 3,
    n_instances: int = 20,
    alpha: float = 0.01,
    eps: float = 2.0**-10,
    seed: int = 0,
    *,
    cfg: ScsConfig | None = None,
    rc_scope: str = "all",
    net: EpsilonNet | None = None,
    jobs: int = 1,
) -> dict:
    """Paired deterministic/SCS scores on forrelated k-fold instances.

    The one-sided paired t-test asks whether the SCS fidelity proxy exceeds
    the deterministic one.
    """
    net = default_net() if net is None else net
    cfg = replace(cfg or ScsConfig(), eps_target=eps, master_seed=seed)
    rng = np.random.default_rng(seed)
    insts = [sample_instance(n, k, "forrelated", rng, seed=i) for i in range(n_instances)]
    recs = pmap(_forr_item, [(inst, eps, alpha, cfg, rc_scope) for inst in insts], jobs, net)
    fd = np.array([r["det"]["fidelity"] for r in recs])
    fs = np.array([r["scs"]["fidelity"] for r in recs])
    diff = fs - fd
    if np.allclose(diff, 0.0):
        p = 1.0
    else:
        p = float(stats.ttest_rel(fs, fd, alternative="greater").pvalue)
    summary = {
        "fidelity_det_mean": float(fd.mean()),
        "fidelity_scs_mean": float(fs.mean()),
        "fidelity_gain_mean": float(diff.mean()),
        "paired_p_value": p,
        "noiseless_tv_within_bound": all(
            r["noiseless_tv_det"] <= r["tv_bound_det"] + 1e-12 and r["noiseless_tv_scs"] <= r["tv_bound_scs"] + 1e-12
            for r in recs
        ),
    }
    return {
        "n": n,
        "k": k,
        "eps": eps,
        "alpha": alpha,
        "rc_scope": rc_scope,
        "config": cfg.to_dict(),
        "records": recs,
        "summary": summary,
    }
