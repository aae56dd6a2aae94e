"""Coherent angle of the K'-averaged noiseless channel as K' grows."""

from __future__ import annotations

import argparse
import json

from scsynth.experiments import cancellation_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--targets", type=int, default=20)
    p.add_argument("--ks", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="cancellation.json")
    a = p.parse_args()
    r = cancellation_experiment(a.targets, a.ks, seed=a.seed, jobs=a.jobs)
    for k, ang in zip(r["ks"], r["mean_coherent_angle"]):
        print(f"K'={k:3d}  mean coherent angle {ang:.3e}")
    print(f"slope {r['fit']['slope']:.3f}  CI {r['fit']['ci95']}")
    with open(a.out, "w") as fh:
        json.dump(r, fh, indent=1, sort_keys=True)


if __name__ == "__main__":
    main()
