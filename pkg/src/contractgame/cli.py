"""Command-line entry points: run, summarize, oracle, plot-export.

Exit codes: 0 on success, 1 when any seed of a run fails, 2 for
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import experiment, oracle


def _cmd_run(args) -> int:
    config = experiment.load_config(args.config)
    workers = 1 if args.deterministic else args.workers
    exp_dir, summary = experiment.run_experiment(
        config, workers=workers, output_root_dir=args.output_root
    )
    print(f"experiment written to {exp_dir}")
    for metric, agg in summary["metrics"].items():
        print(f"  {metric}: {agg['mean']:.4f} ±{agg['std']:.4f}")
    for flag in summary["flags"]:
        print(f"  flag: {flag}")
    if summary["failed_seeds"]:
        print(f"  failed seeds: {summary['failed_seeds']}", file=sys.stderr)
        return 1
    return 0


def _cmd_summarize(args) -> int:
    text, table = experiment.summarize(args.dirs)
    print(text)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(table, fh, indent=2, sort_keys=True)
        print(f"json table written to {args.json}")
    return 0


def _cmd_oracle(args) -> int:
    game, schedule, opponents = oracle.load_game(args.game_file)
    if schedule is None:
        raise experiment.ConfigError("game file does not define a contract schedule")
    print(f"states={len(game.states)} horizon={game.horizon} agents={game.n_agents}")
    print(f"limited liability on contract grid {list(game.contract_grid)}: "
          f"{'OK' if oracle.check_ll(game.contract_grid) else 'VIOLATED'}")
    for focal in range(game.n_agents):
        opp = {i: p for i, p in opponents.items() if i != focal}
        if game.n_agents > 1 and len(opp) != game.n_agents - 1:
            print(f"agent {focal}: skipped (no opponent policies supplied)")
            continue
        solution = oracle.backward_induction(game, schedule, focal=focal, opponents=opp)
        v0 = solution.values[(game.initial_state, 0)]
        print(f"agent {focal}: optimal value from {game.initial_state} = {v0:.6f}")
        for t in range(game.horizon):
            actions = {s: solution.best_action[(s, t)] for s in game.states}
            print(f"  t={t}: best response {actions}")
        violations = oracle.check_ir(game, schedule, solution.policy(), focal=focal, opponents=opp)
        print(f"  IR violations under best response: {len(violations)}")
    return 0


def _cmd_plot_export(args) -> int:
    bundle = experiment.plot_export(args.dirs, args.out)
    print(f"plot bundle written to {bundle}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contractgame",
        description="Train and analyze contract-mediated multi-agent games.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a multi-seed experiment from a YAML config")
    p_run.add_argument("config")
    p_run.add_argument("--workers", type=int, default=1, help="parallel seed workers")
    p_run.add_argument("--deterministic", action="store_true",
                       help="force sequential single-threaded execution")
    p_run.add_argument("--output-root", default=None,
                       help=f"output root (default: ${experiment.OUTPUT_ROOT_ENV} or ./runs)")
    p_run.set_defaults(func=_cmd_run)

    p_sum = sub.add_parser("summarize", help="compare completed experiment directories")
    p_sum.add_argument("dirs", nargs="+")
    p_sum.add_argument("--json", default=None, help="also write the table as JSON")
    p_sum.set_defaults(func=_cmd_summarize)

    p_oracle = sub.add_parser("oracle", help="exact checks on a tabular game file")
    p_oracle.add_argument("game_file")
    p_oracle.set_defaults(func=_cmd_oracle)

    p_export = sub.add_parser("plot-export", help="bundle experiment outputs for plotting")
    p_export.add_argument("dirs", nargs="+")
    p_export.add_argument("-o", "--out", required=True)
    p_export.set_defaults(func=_cmd_plot_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except experiment.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
