"""Command-line driver: ``scsynth <command> [options]``.

Reports are JSON (sorted keys, ``schema_version`` field); sweep tables are
CSV. Exit codes: 0 ok, 2 configuration error, 3 net coverage or size
failure, 4 synthesis failure. Errors are printed to stderr as one line of
JSON.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import experiments as ex
from .forrelation import build_circuit, compile_circuit, decompose_circuit, sample_instance
from .group import Unitary2, from_axis_angle, op_distance, rz
from .net import NetCoverageError, NetFileError, build_net, default_net, load_net, save_net
from .scs import ScsAccuracyError, ScsConfig, derive_seed, scs_synthesize
from .sk import ContractionError, GCDomainError, SkParams, SynthesisError, sk_synthesize, synthesize_to
from .words import WordCapExceeded, clifford_t, clifford_t_paulis

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_COVERAGE, EXIT_SYNTH = 0, 2, 3, 4
GATESETS = {"hst": clifford_t, "hst+paulis": clifford_t_paulis}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG, **extra):
        super().__init__(message)
        self.code = code
        self.extra = extra


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: {message}", EXIT_CONFIG)


# ---------------------------------------------------------------------------
# helpers


def _emit_json(obj: dict, args) -> str:
    obj = {"schema_version": SCHEMA_VERSION, **obj}
    if not args.no_timestamp:
        obj["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    text = json.dumps(obj, sort_keys=True, indent=1)
    return _write(text + "\n", args)


def _write(text: str, args) -> str:
    out = getattr(args, "report", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _net(args):
    path = getattr(args, "net", None) or os.environ.get("SCS_NET_PATH")
    if path:
        try:
            return load_net(path)
        except FileNotFoundError as exc:
            raise CliError(f"net file not found: {path}") from exc
        except NetFileError as exc:
            raise CliError(str(exc)) from exc
    return default_net()


_NAMED = {
    "I": Unitary2((1.0, 0.0, 0.0, 0.0)),
    "H": from_axis_angle((1.0, 0.0, 1.0), math.pi),
    "T": rz(math.pi / 4),
    "Tdg": rz(-math.pi / 4),
    "S": rz(math.pi / 2),
    "Sdg": rz(-math.pi / 2),
    "X": from_axis_angle((1.0, 0.0, 0.0), math.pi),
    "Y": from_axis_angle((0.0, 1.0, 0.0), math.pi),
    "Z": from_axis_angle((0.0, 0.0, 1.0), math.pi),
}


def parse_target(text: str) -> Unitary2:
    """A named gate, ``rz:<theta>``, or 8 floats (re/im of m00 m01 m10 m11)."""
    t = text.strip()
    if t in _NAMED:
        return _NAMED[t]
    try:
        if t.lower().startswith("rz:"):
            return rz(float(t[3:]))
        vals = [float(v) for v in t.replace(",", " ").split()]
    except ValueError as exc:
        raise CliError(f"cannot parse target {text!r}") from exc
    if len(vals) != 8:
        raise CliError(f"target {text!r}: expected a gate name, rz:<theta>, or 8 floats")
    m = np.array(vals).reshape(4, 2) @ np.array([1.0, 1j])
    m = m.reshape(2, 2)
    if not np.allclose(m @ m.conj().T, np.eye(2), atol=1e-8):
        raise CliError("target matrix is not unitary")
    return Unitary2.from_matrix(m)


def _config(args) -> ScsConfig:
    base: dict = {}
    src = getattr(args, "config", None)
    if src:
        try:
            if os.path.exists(src):
                with open(src, encoding="utf-8") as fh:
                    base = json.load(fh)
            else:
                base = json.loads(src)
        except json.JSONDecodeError as exc:
            raise CliError(f"--config is neither a JSON file nor inline JSON: {exc}") from exc
    flag_map = {
        "eps": "eps_target",
        "k": "k_reps",
        "kprime": "ensemble_size",
        "t0": "t0",
        "beta": "beta",
        "mcmc_steps": "mcmc_steps",
        "seed": "master_seed",
        "depth": "depth",
    }
    for flag, key in flag_map.items():
        v = getattr(args, flag, None)
        if v is not None:
            base[key] = v
    try:
        return ScsConfig.from_dict(base)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid configuration: {exc}") from exc


def _add_common(p, seed=True, jobs=False, net=True):
    p.add_argument("--no-timestamp", action="store_true", help="omit the generated_at field")
    p.add_argument("--report", help="write the report here instead of stdout")
    if net:
        p.add_argument("--net", help="net file (default: $SCS_NET_PATH, else the built-in net)")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    if jobs:
        p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")


def _add_scs(p):
    p.add_argument("--config", help="ScsConfig as a JSON file or inline JSON")
    p.add_argument("--k", type=int, help="candidates per level K (default 12)")
    p.add_argument("--kprime", type=int, help="ensemble size K' (default 16)")
    p.add_argument("--t0", type=float, help="initial temperature (default 0.1)")
    p.add_argument("--beta", type=float, help="cooling factor (default 0.7)")
    p.add_argument("--mcmc-steps", dest="mcmc_steps", type=int, help="Metropolis refinement steps (default 0)")


# ---------------------------------------------------------------------------
# commands


def cmd_net_build(args) -> int:
    gs = GATESETS[args.gateset]()
    net = build_net(gs, args.eps0, args.k, args.max_len, cap=args.cap)
    save_net(net, args.out)
    _emit_json({"command": "net-build", **_net_stats(net), "out": args.out}, args)
    return EXIT_OK


def _net_stats(net) -> dict:
    return {
        "entries": len(net),
        "eps0": net.eps0,
        "k_reps": net.k_reps,
        "max_len": net.max_len,
        "coverage_radius": net.coverage,
        "longest_word": net.longest,
        "gateset": list(net.gateset.names),
        "gateset_fingerprint": net.gateset.fingerprint(),
    }


def cmd_net_info(args) -> int:
    _emit_json({"command": "net-info", **_net_stats(_net(args))}, args)
    return EXIT_OK


def cmd_synth(args) -> int:
    net = _net(args)
    target = parse_target(args.target)
    cfg = _config(args)
    eps = cfg.eps_target
    if args.mode == "sk":
        if args.depth is None:
            word = synthesize_to(target, eps, net)
            depth = None
        else:
            word = sk_synthesize(target, SkParams(args.depth, net))
            depth = args.depth
    else:
        run = scs_synthesize(target, cfg, derive_seed(cfg.master_seed, 0), net)
        word = run.word
        depth = run.trace[-1].level
    d = op_distance(word.unitary, target)
    d2 = ex.dense_distance(word, target)
    if abs(d - d2) > 1e-9:
        raise CliError(f"distance re-verification failed ({d} vs {d2})", EXIT_SYNTH)
    if d > eps:
        raise CliError(f"achieved distance {d:.3g} exceeds eps={eps:g}", EXIT_SYNTH, achieved=d)
    _emit_json(
        {
            "command": "synth",
            "mode": args.mode,
            "target": args.target,
            "config": cfg.to_dict(),
            "depth": depth,
            "word": str(word),
            "length": len(word),
            "t_count": word.t_count(),
            "distance": d,
        },
        args,
    )
    return EXIT_OK


def _parse_ints(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise CliError(f"cannot parse integer list {text!r}") from exc


def cmd_scaling(args) -> int:
    depths = _parse_ints(args.depths)
    if len(set(depths)) < 3:
        raise CliError("a scaling sweep needs at least 3 depth points")
    net = _net(args)
    cfg = _config(args)
    modes = ["sk", "scs"] if args.mode == "both" else [args.mode]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["schema_version", "mode", "depth", "eps", "eps_max", "mean_length", "slope", "ci95_low", "ci95_high"])
    for mode in modes:
        r = ex.scaling_sweep(mode, depths, args.targets, args.seed, cfg=cfg, net=net, jobs=args.jobs)
        fit = r["fit"]
        for row in r["rows"]:
            w.writerow(
                [SCHEMA_VERSION, mode, row["depth"], repr(row["eps"]), repr(row["eps_max"]), repr(row["mean_length"]),
                 repr(fit["slope"]), repr(fit["ci95"][0]), repr(fit["ci95"][1])]
            )
    _write(buf.getvalue(), args)
    return EXIT_OK


def cmd_rc_exp(args) -> int:
    net = _net(args)
    cfg = _config(args)
    r = ex.rc_experiment(args.angles, cfg, args.alpha, args.seed, net=net, jobs=args.jobs)
    _emit_json({"command": "rc-exp", "master_seed": args.seed, "fidelity_convention": "entanglement", **r}, args)
    return EXIT_OK


def cmd_forrelation(args) -> int:
    net = _net(args)
    cfg = _config(args)
    r = ex.forrelation_experiment(
        args.n, args.k_fold, args.instances, args.alpha, args.eps, args.seed,
        cfg=cfg, rc_scope=args.rc_scope, net=net, jobs=args.jobs,
    )
    _emit_json(
        {"command": "forrelation", "master_seed": args.seed, "fidelity_convention": "output-state fidelity on |0..0>", **r},
        args,
    )
    return EXIT_OK


def cmd_tcount(args) -> int:
    net = _net(args)
    gs = net.gateset
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["schema_version", "item", "length", "t_count"])
    for text in args.word or []:
        try:
            word = gs.parse(text)
        except KeyError as exc:
            raise CliError(str(exc)) from exc
        w.writerow([SCHEMA_VERSION, text, len(word), word.t_count()])
    eps = args.eps
    for text in args.target or []:
        word = synthesize_to(parse_target(text), eps, net)
        w.writerow([SCHEMA_VERSION, f"{text}@{eps:g}", len(word), word.t_count()])
    if args.circuit:
        n, k = (int(v) for v in args.circuit.split(","))
        inst = sample_instance(n, k, "forrelated", np.random.default_rng(args.seed), seed=args.seed)
        circ = compile_circuit(decompose_circuit(build_circuit(inst), inst), "deterministic", eps, net=net)
        total = 0
        for pos, op in enumerate(circ.ops):
            if op.kind == "word":
                wd = op.words[0]
                total += wd.t_count()
                w.writerow([SCHEMA_VERSION, f"circuit[{pos}] rz({op.angle!r}) q{op.qubits[0]}", len(wd), wd.t_count()])
        w.writerow([SCHEMA_VERSION, "circuit total", "", total])
    _write(buf.getvalue(), args)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="scsynth", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("net-build", help="enumerate words and save an epsilon-net")
    q.add_argument("--gateset", choices=sorted(GATESETS), default="hst")
    q.add_argument("--eps0", type=float, default=0.3)
    q.add_argument("--k", type=int, default=16)
    q.add_argument("--max-len", dest="max_len", type=int, default=10)
    q.add_argument("--cap", type=int, default=5_000_000, help="maximum words visited")
    q.add_argument("--out", required=True)
    _add_common(q, seed=False, net=False)
    q.set_defaults(func=cmd_net_build)

    q = sub.add_parser("net-info", help="summarize a net file")
    _add_common(q, seed=False)
    q.set_defaults(func=cmd_net_info)

    q = sub.add_parser("synth", help="synthesize one target")
    q.add_argument("--target", required=True, help="gate name, rz:<theta>, or 8 floats")
    q.add_argument("--mode", choices=("sk", "scs"), default="sk")
    q.add_argument("--eps", type=float, help="accuracy (default 2^-8)")
    q.add_argument("--depth", type=int, help="recursion depth (default: smallest calibrated depth for eps)")
    _add_scs(q)
    _add_common(q, seed=True)
    q.set_defaults(func=cmd_synth, seed=None)

    q = sub.add_parser("scaling", help="word length vs accuracy sweep (CSV)")
    q.add_argument("--mode", choices=("sk", "scs", "both"), default="sk")
    q.add_argument("--depths", default="1..6", help="e.g. 1..6 or 1,2,3,4,5 (default 1..6)")
    q.add_argument("--targets", type=int, default=20)
    _add_scs(q)
    _add_common(q, jobs=True)
    q.set_defaults(func=cmd_scaling)

    q = sub.add_parser("rc-exp", help="trace-distance and coherent-error experiment")
    q.add_argument("--angles", type=int, default=100)
    q.add_argument("--eps", type=float, default=2.0**-8)
    q.add_argument("--alpha", type=float, default=0.01, help="over-rotation per gate in radians")
    q.add_argument("--depth", type=int)
    _add_scs(q)
    _add_common(q, jobs=True)
    q.set_defaults(func=cmd_rc_exp)

    q = sub.add_parser("forrelation", help="k-fold Forrelation compile-and-score experiment")
    q.add_argument("--n", type=int, default=3)
    q.add_argument("--k-fold", dest="k_fold", type=int, default=3)
    q.add_argument("--instances", type=int, default=20)
    q.add_argument("--alpha", type=float, default=0.01)
    q.add_argument("--eps", type=float, default=2.0**-10)
    q.add_argument("--rc-scope", dest="rc_scope", choices=("all", "words"), default="all")
    q.add_argument("--depth", type=int)
    _add_scs(q)
    _add_common(q, jobs=True)
    q.set_defaults(func=cmd_forrelation)

    q = sub.add_parser("tcount", help="T-counts of words, compiled targets or a compiled circuit (CSV)")
    q.add_argument("--word", action="append", help="gate word, e.g. 'H T H Tdg' (repeatable)")
    q.add_argument("--target", action="append", help="target to compile first (repeatable)")
    q.add_argument("--circuit", help="'n,k': compile a forrelated instance drawn from --seed")
    q.add_argument("--eps", type=float, default=2.0**-10)
    _add_common(q)
    q.set_defaults(func=cmd_tcount)
    return p


def _fail(code: int, kind: str, message: str, **extra) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code, **extra}, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise CliError("--jobs must be >= 1")
        return args.func(args)
    except CliError as exc:
        return _fail(exc.code, "usage" if exc.code == EXIT_CONFIG else "failure", str(exc), **exc.extra)
    except (NetCoverageError, WordCapExceeded, ContractionError) as exc:
        return _fail(EXIT_COVERAGE, type(exc).__name__, f"{exc}")
    except (SynthesisError, ScsAccuracyError, GCDomainError) as exc:
        return _fail(EXIT_SYNTH, type(exc).__name__, str(exc), achieved=getattr(exc, "achieved", None))
    except (ValueError, KeyError, NetFileError) as exc:
        return _fail(EXIT_CONFIG, type(exc).__name__, str(exc))
    except RuntimeError as exc:
        cause = getattr(exc, "cause", None)
        if isinstance(cause, (SynthesisError, ScsAccuracyError)):
            return _fail(EXIT_SYNTH, type(exc).__name__, str(exc))
        raise


if __name__ == "__main__":
    sys.exit(main())
