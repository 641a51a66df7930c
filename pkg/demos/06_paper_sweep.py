"""Reproduce the headline comparison table across all objectives.

This drives the same machinery as `contractgame run configs/paper/*.yaml`;
at the shipped iteration counts every experiment takes on the order of an
hour per seed-pair on a 2-core machine, so the sweep is something you start
and leave alone. Pass --smoke to cut iterations 20x for a quick look.

Run:  python demos/06_paper_sweep.py [--smoke] [--workers N]
"""

import argparse
import dataclasses
from pathlib import Path

from contractgame.experiment import load_config, run_experiment, summarize

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs" / "paper"
SWEEP = ["nop", "greedy", "fix", "wr_1", "wr_9", "wr_12", "vr_0_75", "vr_1_0", "vr_1_25"]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--smoke", action="store_true", help="1/20th of the iterations")
    parser.add_argument("--workers", type=int, default=2)
    parser.add_argument("--out", default="runs/paper_sweep")
    args = parser.parse_args()

    done = []
    for name in SWEEP:
        config = load_config(CONFIG_DIR / f"{name}.yaml")
        if args.smoke:
            config = dataclasses.replace(config, iterations=max(100, config.iterations // 20))
        config = dataclasses.replace(config, output_dir=f"{args.out}/{name}")
        print(f"== {name}: {config.iterations} iterations x {len(config.seeds)} seeds")
        exp_dir, summary = run_experiment(config, workers=args.workers)
        done.append(exp_dir)
        for metric, agg in summary["metrics"].items():
            print(f"   {metric:>15}: {agg['mean']:.3f} +/-{agg['std']:.3f}")

    text, _ = summarize(done)
    print("\n" + text)


if __name__ == "__main__":
    main()
