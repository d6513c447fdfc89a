"""Pilot run used to freeze the compressive-degradation thresholds.

Runs compressive template matching on the planted 16x16x4 suite for a
block of pilot seeds (disjoint from the seeds used by the acceptance
test) and prints mean/max wrong_pct per configuration.

    python3 scripts/pilot_degradation.py --seeds 100..109
"""
import argparse

import numpy as np

from cspattern.cli import parse_values
from cspattern.sweeps import SweepSetup, run_once


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", default="100..109")
    args = ap.parse_args()
    seeds = [int(s) for s in parse_values(args.seeds)]
    configs = [("tvl1", "gaussian", 0.05), ("tvl1", "gaussian", 0.30),
               ("l1", "gaussian", 0.30), ("tvl1", "circulant", 0.30)]
    for reg, kind, rate in configs:
        setup = SweepSetup("template", reg, kind)
        vals = [run_once(setup, rate, 0.0, s) for s in seeds]
        pct = np.array([v[0] for v in vals])
        conv = np.mean([v[1] for v in vals])
        print(f"{reg:5s} {kind:9s} p={rate:.2f}  mean={pct.mean():.3f}  max={pct.max():.3f}  "
              f"converged={conv:.1f}  runs={np.round(pct, 2).tolist()}")


if __name__ == "__main__":
    main()
