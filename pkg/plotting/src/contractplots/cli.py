"""Standalone figure generation from an exported experiment bundle."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bundle import SchemaError, load_bundle
from .figures import (
    plot_contract_heatmap,
    plot_curves,
    plot_wealth_curves,
    plot_wealth_spread,
)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="contractplots",
        description="Render figures from a `contractgame plot-export` bundle.",
    )
    parser.add_argument("bundle", help="bundle directory (or a bare experiment directory)")
    parser.add_argument("-o", "--out", default="figures", help="output directory")
    parser.add_argument(
        "--metrics",
        nargs="*",
        default=["welfare", "one_minus_gini"],
        help="log columns to draw as learning curves",
    )
    parser.add_argument("--smooth", type=int, default=0, help="rolling-mean window (0 = off)")
    parser.add_argument("--no-spread", action="store_true", help="skip the wealth-spread bars")
    parser.add_argument("--wealth-curves", action="store_true",
                        help="also draw per-party wealth curves for every experiment")
    parser.add_argument("--heatmap", metavar="EXPERIMENT",
                        help="draw the contract-mean heatmap from this experiment's checkpoint")
    parser.add_argument("--seed", type=int, default=None, help="seed for --heatmap (default: first)")
    args = parser.parse_args(argv)

    try:
        bundle = load_bundle(args.bundle)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out)
    written = []
    for metric in args.metrics:
        written.append(plot_curves(bundle, metric, out / f"curve_{metric}.png", args.smooth or None))
    if not args.no_spread:
        written.append(plot_wealth_spread(bundle, out / "wealth_spread.png"))
    if args.wealth_curves:
        for name, exp in sorted(bundle.experiments.items()):
            written.append(plot_wealth_curves(exp, out / f"wealth_curves_{name}.png"))
    if args.heatmap:
        try:
            exp = bundle.experiment(args.heatmap)
        except KeyError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        if not exp.checkpoints:
            print(f"error: experiment {args.heatmap} has no checkpoints", file=sys.stderr)
            return 2
        seed = args.seed if args.seed is not None else sorted(exp.checkpoints)[0]
        try:
            ckpt = exp.checkpoints[seed]
        except KeyError:
            print(f"error: no checkpoint for seed {seed}", file=sys.stderr)
            return 2
        try:
            written.append(plot_contract_heatmap(ckpt, out / f"contract_heatmap_{args.heatmap}.png"))
        except SchemaError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2

    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
