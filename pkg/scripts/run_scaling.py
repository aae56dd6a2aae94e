"""Word length vs achieved accuracy for deterministic and SCS synthesis."""

from __future__ import annotations

import argparse
import json

from scsynth.experiments import scaling_sweep


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--depths", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6])
    p.add_argument("--targets", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="scaling.json")
    a = p.parse_args()
    out = {m: scaling_sweep(m, a.depths, a.targets, a.seed, jobs=a.jobs) for m in ("sk", "scs")}
    for m, r in out.items():
        print(f"{m}: slope {r['fit']['slope']:.3f} CI {r['fit']['ci95'][0]:.3f}..{r['fit']['ci95'][1]:.3f}")
        for row in r["rows"]:
            print(f"  depth {row['depth']}: eps {row['eps']:.3e}  mean length {row['mean_length']:.1f}")
    with open(a.out, "w") as fh:
        json.dump(out, fh, indent=1, sort_keys=True)


if __name__ == "__main__":
    main()
