"""Steering value as a function of observation noise.

Runs a small grid of relative noise levels times seeds and prints the
median achieved value, the median fraction of steps where the analysis
reduced the data misfit, and the oracle ratio per level. Useful for
judging how far the loop degrades before recommendations stop paying
for the measurements.

    python3 scripts/sweep_noise.py --noises 0.05,0.1,0.2,0.4 --seeds 5
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from distinguish.engine import RunConfig, init_run, run_to_completion, score


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--noises", default="0.05,0.1,0.2,0.4",
                        help="comma-separated relative noise levels")
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--ensemble-size", type=int, default=100)
    args = parser.parse_args(argv)

    levels = [float(tok) for tok in args.noises.split(",") if tok.strip()]
    print(f"{'noise':>6} {'achieved':>10} {'oracle_ratio':>13} {'reduced':>8}")
    for level in levels:
        achieved, ratios, reduced = [], [], []
        for seed in range(args.seeds):
            cfg = RunConfig(seed=seed, ensemble_size=args.ensemble_size,
                            noise_relative=level)
            state = run_to_completion(init_run(cfg))
            s = score(state)
            achieved.append(s["achieved"])
            if s["oracle"] > 0:
                ratios.append(s["achieved"] / s["oracle"])
            reduced.append(np.mean([
                r.report.posterior_misfit <= r.report.prior_misfit
                for r in state.history]))
        print(f"{level:>6.2f} {np.median(achieved):>10.2f} "
              f"{np.median(ratios) if ratios else float('nan'):>13.3f} "
              f"{np.median(reduced):>8.1%}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
