"""Declarative experiment runner and result aggregation.

An experiment is one YAML file: game + objective + trainer parameters, a
seed list, and an iteration budget. Running it produces one directory per
seed (training log CSV, final checkpoint, config snapshot pinned to that
seed) plus a top-level ``summary.json`` with mean and std of every metric
across seeds over the final evaluation window. Logs are written with
round-trip float formatting, so a repeated run with the same seeds is
byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import shutil
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from .contracts import PAConfig
from .env import EnvConfig
from .nets import save_checkpoint
from .objectives import ObjectiveSpec
from .ppo import TrainerConfig, train

__all__ = [
    "SCHEMA_VERSION",
    "CSV_COLUMNS",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "run_experiment",
    "run_seed",
    "summarize",
    "plot_export",
    "write_log",
    "read_log",
    "output_root",
]

SCHEMA_VERSION = 1
OUTPUT_ROOT_ENV = "CONTRACTGAME_OUTPUT"

CSV_COLUMNS = [
    "iteration",
    "seed",
    "objective",
    "lambda",
    "mean_alpha",
    "reject_rate_red",
    "reject_rate_blue",
    "wealth_red",
    "wealth_blue",
    "wealth_principal",
    "welfare",
    "one_minus_gini",
    "rawlsian",
    "aie",
    "kl_principal",
    "entropy_red",
    "entropy_blue",
]

SUMMARY_METRICS = ["one_minus_gini", "welfare", "rawlsian", "aie"]
WEALTH_COLUMNS = ["wealth_red", "wealth_blue", "wealth_principal"]
INT_COLUMNS = {"iteration", "seed"}
STR_COLUMNS = {"objective"}


class ConfigError(ValueError):
    """Raised for malformed experiment files; maps to CLI exit code 2."""


# -- configuration ----------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    name: str
    game: PAConfig
    trainer: TrainerConfig
    objective: ObjectiveSpec
    seeds: tuple[int, ...] = (0, 1, 2)
    iterations: int = 1500
    eval_window_fraction: float = 0.05
    output_dir: str | None = None

    def __post_init__(self) -> None:
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds must be non-negative")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if not 0 < self.eval_window_fraction <= 1:
            raise ConfigError("eval_window_fraction must lie in (0, 1]")
        if not self.name:
            raise ConfigError("experiment name must be non-empty")


def _build(cls, section: dict, where: str, rename: dict | None = None, drop: tuple = ()):
    rename = rename or {}
    kwargs = {}
    for key, value in section.items():
        field = rename.get(key, key)
        kwargs[field] = value
    allowed = {f.name for f in dataclasses.fields(cls)} - set(drop)
    unknown = set(kwargs) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {where} section: {exc}") from exc


def config_from_dict(doc: dict, default_name: str = "experiment") -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("experiment file must contain a mapping")
    known = {"name", "game", "objective", "trainer", "seeds", "iterations",
             "eval_window_fraction", "output_dir"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    game_section = dict(doc.get("game", {}))
    env_fields = {f.name for f in dataclasses.fields(EnvConfig)}
    env_part = {k: v for k, v in game_section.items() if k in env_fields}
    pa_part = {k: v for k, v in game_section.items() if k not in env_fields}
    if "types" in pa_part:
        pa_part["types"] = tuple(pa_part["types"])
    env_cfg = _build(EnvConfig, env_part, "game")
    game = _build(PAConfig, {"env": env_cfg, **pa_part}, "game")

    objective = _build(
        ObjectiveSpec, dict(doc.get("objective", {})), "objective", rename={"lambda": "lam"}
    )
    trainer_section = dict(doc.get("trainer", {}))
    if "seed" in trainer_section:
        raise ConfigError("trainer.seed is managed by the seeds list")
    trainer = _build(TrainerConfig, trainer_section, "trainer")

    try:
        return ExperimentConfig(
            name=str(doc.get("name", default_name)),
            game=game,
            trainer=trainer,
            objective=objective,
            seeds=tuple(int(s) for s in doc.get("seeds", (0, 1, 2))),
            iterations=int(doc.get("iterations", 1500)),
            eval_window_fraction=float(doc.get("eval_window_fraction", 0.05)),
            output_dir=doc.get("output_dir"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def config_to_dict(config: ExperimentConfig) -> dict:
    game = dataclasses.asdict(config.game)
    env_part = game.pop("env")
    game = {**env_part, **game, "types": list(config.game.types)}
    trainer = dataclasses.asdict(config.trainer)
    trainer.pop("seed")
    objective = dataclasses.asdict(config.objective)
    objective["lambda"] = objective.pop("lam")
    doc = {
        "name": config.name,
        "game": game,
        "objective": objective,
        "trainer": trainer,
        "seeds": list(config.seeds),
        "iterations": config.iterations,
        "eval_window_fraction": config.eval_window_fraction,
    }
    if config.output_dir is not None:
        doc["output_dir"] = config.output_dir
    return doc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(doc, default_name=path.stem)


def output_root(override: str | None = None) -> Path:
    return Path(override or os.environ.get(OUTPUT_ROOT_ENV, "runs"))


# -- CSV logs ---------------------------------------------------------------------


def _format_cell(column: str, value) -> str:
    if column in STR_COLUMNS:
        return str(value)
    if column in INT_COLUMNS:
        return str(int(value))
    return repr(float(value))


def write_log(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_format_cell(col, row[col]) for col in CSV_COLUMNS])


def read_log(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_COLUMNS:
            raise ConfigError(f"unexpected log schema in {path}")
        raw_rows = list(reader)
    out: dict[str, np.ndarray] = {}
    for j, col in enumerate(CSV_COLUMNS):
        cells = [row[j] for row in raw_rows]
        if col in STR_COLUMNS:
            out[col] = np.array(cells, dtype=object)
        elif col in INT_COLUMNS:
            out[col] = np.array([int(c) for c in cells], dtype=int)
        else:
            out[col] = np.array([float(c) for c in cells], dtype=np.float64)
    return out


# -- per-seed execution -----------------------------------------------------------


def run_seed(config: ExperimentConfig, seed: int, seed_dir) -> dict:
    """Train one seed and leave its artifacts in ``seed_dir``."""
    seed_dir = Path(seed_dir)
    seed_dir.mkdir(parents=True, exist_ok=True)
    snapshot = config_to_dict(config)
    snapshot["seeds"] = [seed]
    (seed_dir / "config_snapshot.yaml").write_text(yaml.safe_dump(snapshot, sort_keys=False))

    result = train(
        config.game,
        config.trainer,
        config.objective,
        config.iterations,
        seed=seed,
        checkpoint_dir=seed_dir,
    )
    write_log(seed_dir / "log.csv", result.rows)
    save_checkpoint(result.nets, seed_dir / "checkpoint.npz")
    return {"seed": seed, "rows": len(result.rows)}


def _run_seed_entry(args) -> tuple[int, dict | None, str | None]:
    config, seed, seed_dir = args
    try:
        info = run_seed(config, seed, seed_dir)
        return seed, info, None
    except Exception:
        err = traceback.format_exc()
        Path(seed_dir).mkdir(parents=True, exist_ok=True)
        (Path(seed_dir) / "error.txt").write_text(err)
        return seed, None, err


def evaluate_seed_dir(seed_dir, eval_window_fraction: float) -> dict:
    """Final-window means of every numeric column of one seed's log."""
    log = read_log(Path(seed_dir) / "log.csv")
    n = log["iteration"].size
    if n == 0:
        return {"flags": ["insufficient data"], "rows": 0}
    window = max(1, int(round(eval_window_fraction * n)))
    result: dict = {"rows": n, "window": window, "flags": []}
    for col in SUMMARY_METRICS + WEALTH_COLUMNS + ["mean_alpha", "reject_rate_red", "reject_rate_blue"]:
        value = float(np.mean(log[col][n - window:]))
        result[col] = value
        if math.isnan(value) and col in SUMMARY_METRICS:
            result["flags"].append(f"{col} undefined (non-positive mean wealth)")
    return result


def _aggregate(per_seed: dict[int, dict], key: str) -> dict:
    values = [info[key] for info in per_seed.values() if key in info]
    if not values:
        return {"mean": math.nan, "std": math.nan}
    arr = np.array(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "std": std, "values": [float(v) for v in values]}


def build_summary(config: ExperimentConfig, exp_dir: Path, failures: dict[int, str]) -> dict:
    per_seed: dict[int, dict] = {}
    flags: list[str] = []
    for seed in config.seeds:
        if seed in failures:
            flags.append(f"seed {seed} failed")
            continue
        info = evaluate_seed_dir(exp_dir / f"seed_{seed}", config.eval_window_fraction)
        per_seed[seed] = info
        flags.extend(f"seed {seed}: {f}" for f in info["flags"])

    summary = {
        "schema_version": SCHEMA_VERSION,
        "name": config.name,
        "objective": config.objective.kind,
        "lambda": config.objective.lam,
        "include_principal": config.objective.include_principal_in_metrics,
        "seeds": list(config.seeds),
        "iterations": config.iterations,
        "eval_window_fraction": config.eval_window_fraction,
        "metrics": {m: _aggregate(per_seed, m) for m in SUMMARY_METRICS},
        "wealth": {c.removeprefix("wealth_"): _aggregate(per_seed, c) for c in WEALTH_COLUMNS},
        "mean_alpha": _aggregate(per_seed, "mean_alpha"),
        "per_seed": {str(s): info for s, info in per_seed.items()},
        "flags": flags,
        "failed_seeds": sorted(failures),
    }
    return summary


def run_experiment(
    config: ExperimentConfig,
    workers: int = 1,
    output_root_dir: str | None = None,
) -> tuple[Path, dict]:
    """Run every seed (optionally in parallel) and write the summary.

    Seeds are fully independent, so parallel execution produces the same
    artifacts as sequential execution; ``workers=1`` is the deterministic
    single-threaded mode.
    """
    exp_dir = Path(config.output_dir) if config.output_dir else output_root(output_root_dir) / config.name
    exp_dir.mkdir(parents=True, exist_ok=True)

    jobs = [(config, seed, exp_dir / f"seed_{seed}") for seed in config.seeds]
    failures: dict[int, str] = {}
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for seed, _, err in pool.map(_run_seed_entry, jobs):
                if err is not None:
                    failures[seed] = err
    else:
        for job in jobs:
            seed, _, err = _run_seed_entry(job)
            if err is not None:
                failures[seed] = err

    summary = build_summary(config, exp_dir, failures)
    (exp_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return exp_dir, summary


# -- cross-experiment comparison ----------------------------------------------------


def _load_summary(exp_dir) -> dict:
    path = Path(exp_dir) / "summary.json"
    if not path.exists():
        raise ConfigError(f"{exp_dir} has no summary.json (not a completed experiment)")
    summary = json.loads(path.read_text())
    if summary.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"{exp_dir}: schema version {summary.get('schema_version')} "
            f"!= supported {SCHEMA_VERSION}"
        )
    return summary


METRIC_LABELS = {
    "one_minus_gini": "1 - Gini",
    "welfare": "Welfare",
    "rawlsian": "Rawlsian",
    "aie": "AIE",
}


def summarize(exp_dirs) -> tuple[str, dict]:
    """Comparison table across experiments: metrics as rows, runs as columns."""
    if not exp_dirs:
        raise ConfigError("need at least one experiment directory")
    summaries = [_load_summary(d) for d in exp_dirs]

    def cell(summary: dict, metric: str) -> str:
        agg = summary["metrics"][metric]
        if math.isnan(agg["mean"]):
            return "--"
        digits = 2 if metric == "one_minus_gini" else 1
        return f"{agg['mean']:.{digits}f} ±{agg['std']:.{digits}f}"

    names = [s["name"] for s in summaries]
    widths = [max(10, len(n) + 2) for n in names]
    lines = ["Metric".ljust(12) + "".join(n.rjust(w) for n, w in zip(names, widths))]
    for metric in SUMMARY_METRICS:
        row = METRIC_LABELS[metric].ljust(12)
        row += "".join(cell(s, metric).rjust(w) for s, w in zip(summaries, widths))
        lines.append(row)
    flagged = [s["name"] for s in summaries if s["flags"]]
    if flagged:
        lines.append(f"flagged: {', '.join(flagged)} (see summary.json flags)")

    table = {
        "schema_version": SCHEMA_VERSION,
        "experiments": {
            s["name"]: {
                "objective": s["objective"],
                "lambda": s["lambda"],
                "include_principal": s["include_principal"],
                "metrics": s["metrics"],
                "flags": s["flags"],
            }
            for s in summaries
        },
    }
    return "\n".join(lines), table


# -- plotting bundle export ----------------------------------------------------------


def plot_export(exp_dirs, bundle_dir) -> Path:
    """Collect experiment artifacts into a self-contained plotting bundle."""
    bundle_dir = Path(bundle_dir)
    bundle_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"schema_version": SCHEMA_VERSION, "experiments": []}
    for exp_dir in exp_dirs:
        exp_dir = Path(exp_dir)
        summary = _load_summary(exp_dir)
        name = summary["name"]
        dest = bundle_dir / name
        dest.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(exp_dir / "summary.json", dest / "summary.json")
        entry = {
            "name": name,
            "objective": summary["objective"],
            "lambda": summary["lambda"],
            "include_principal": summary["include_principal"],
            "summary": f"{name}/summary.json",
            "logs": {},
            "checkpoints": {},
        }
        for seed in summary["seeds"]:
            if seed in summary.get("failed_seeds", []):
                continue
            seed_src = exp_dir / f"seed_{seed}"
            seed_dst = dest / f"seed_{seed}"
            seed_dst.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(seed_src / "log.csv", seed_dst / "log.csv")
            entry["logs"][str(seed)] = f"{name}/seed_{seed}/log.csv"
            ckpt = seed_src / "checkpoint.npz"
            if ckpt.exists():
                shutil.copyfile(ckpt, seed_dst / "checkpoint.npz")
                entry["checkpoints"][str(seed)] = f"{name}/seed_{seed}/checkpoint.npz"
        manifest["experiments"].append(entry)
    (bundle_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return bundle_dir
