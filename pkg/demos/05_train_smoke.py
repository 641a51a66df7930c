"""A short end-to-end training run with the fixed 2/3 contract.

Trains two PPO agents for 150 iterations (a couple of minutes on a laptop),
prints the learning curve, and leaves a complete experiment directory
(CSV log, checkpoint, summary) under ./runs/demo_fix.

Run:  python demos/05_train_smoke.py
"""

from contractgame.experiment import config_from_dict, run_experiment


def main():
    config = config_from_dict(
        {
            "name": "demo_fix",
            "game": {},
            "objective": {"kind": "fix"},
            "trainer": {},
            "seeds": [0],
            "iterations": 150,
            "output_dir": "runs/demo_fix",
        }
    )
    print("training: Fix objective (alpha = 2/3), 1 seed x 150 iterations")
    exp_dir, summary = run_experiment(config)
    print(f"\nartifacts in {exp_dir}")
    for metric, agg in summary["metrics"].items():
        print(f"  {metric:>15}: {agg['mean']:.3f}")
    print("\nfollow-ups:")
    print(f"  contractgame summarize {exp_dir}")
    print(f"  contractgame plot-export {exp_dir} -o runs/demo_bundle")
    print("  contractplots runs/demo_bundle -o runs/demo_figures   (needs plotting/)")


if __name__ == "__main__":
    main()
