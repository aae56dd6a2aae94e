"""Trace-distance and coherent-error comparison of deterministic words and SCS ensembles on Rz targets."""

from __future__ import annotations

import argparse
import json

from scsynth.experiments import rc_experiment
from scsynth.scs import ScsConfig


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--angles", type=int, default=100)
    p.add_argument("--kprime", type=int, default=16)
    p.add_argument("--eps", type=float, default=2.0**-8)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="rc.json")
    a = p.parse_args()
    cfg = ScsConfig(eps_target=a.eps, ensemble_size=a.kprime)
    r = rc_experiment(a.angles, cfg, a.alpha, a.seed, jobs=a.jobs)
    for k, v in r["summary"].items():
        print(f"{k}: {v}")
    with open(a.out, "w") as fh:
        json.dump(r, fh, indent=1, sort_keys=True)


if __name__ == "__main__":
    main()
