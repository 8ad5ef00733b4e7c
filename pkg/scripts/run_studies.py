#!/usr/bin/env python3
"""Run the rule-comparison studies and drop their reports under out/.

Usage:
    python scripts/run_studies.py                 # all three presets
    python scripts/run_studies.py alp-study       # one preset
    python scripts/run_studies.py --samples 5000  # quicker, noisier
"""

import argparse
import sys

from multistop.experiments import EXPERIMENT_PRESETS, run_experiment


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("presets", nargs="*", default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default="out")
    args = parser.parse_args()
    names = args.presets or sorted(EXPERIMENT_PRESETS)
    for name in names:
        report = run_experiment(
            name, out_dir=f"{args.out}/{name}", seed=args.seed, n_scenarios=args.samples
        )
        for objective, entry in report["objectives"].items():
            opt = entry["rules"]["optimal"]
            beats = all(v["significant_1pct"] for v in entry["optimal_beats"].values())
            print(
                f"{name:>10} [{objective:6}] optimal {opt['mean']:8.4f} "
                f"(ref {entry['reference_solid']:8.4f})  beats-others: {beats}"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
