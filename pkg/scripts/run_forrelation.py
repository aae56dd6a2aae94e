"""Paired deterministic vs SCS compilation of forrelated k-fold circuits under over-rotation noise."""

from __future__ import annotations

import argparse
import json

from scsynth.experiments import forrelation_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--eps", type=float, default=2.0**-10)
    p.add_argument("--rc-scope", choices=("all", "words"), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="forrelation.json")
    a = p.parse_args()
    r = forrelation_experiment(
        a.n, a.k, a.instances, a.alpha, a.eps, a.seed, rc_scope=a.rc_scope, jobs=a.jobs
    )
    for k, v in r["summary"].items():
        print(f"{k}: {v}")
    with open(a.out, "w") as fh:
        json.dump(r, fh, indent=1, sort_keys=True)


if __name__ == "__main__":
    main()
