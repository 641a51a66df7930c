"""Reading the experiment bundle layout produced by `contractgame plot-export`.

This package talks to the trainer only through its on-disk interfaces:

- ``manifest.json``: schema version plus one entry per experiment with
  relative paths to summaries, per-seed CSV logs, and checkpoints;
- ``summary.json``: per-experiment aggregates (metric/wealth mean and std);
- ``log.csv``: the fixed 17-column training log schema;
- ``checkpoint.npz``: flat float64 arrays under ``<learner>/<param>`` keys
  with a JSON header under ``__meta__``.

Any schema-version mismatch is refused rather than guessed at.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SUPPORTED_SCHEMA = 1

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
STR_COLUMNS = {"objective"}
PARTY_ORDER = ("red", "blue", "principal")


class SchemaError(ValueError):
    """The bundle speaks a schema version this package does not."""


def _check_version(version, where: str) -> None:
    if version != SUPPORTED_SCHEMA:
        raise SchemaError(f"{where}: schema version {version!r} != supported {SUPPORTED_SCHEMA}")


def read_log(path) -> dict[str, np.ndarray]:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    if header != CSV_COLUMNS:
        raise SchemaError(f"{path}: unexpected log columns")
    rows = [line.split(",") for line in lines[1:]]
    out: dict[str, np.ndarray] = {}
    for j, col in enumerate(CSV_COLUMNS):
        cells = [row[j] for row in rows]
        if col in STR_COLUMNS:
            out[col] = np.array(cells, dtype=object)
        else:
            out[col] = np.array([float(c) for c in cells], dtype=np.float64)
    return out


@dataclass(frozen=True)
class ExperimentData:
    """One experiment's logs and aggregates, keyed by seed."""

    name: str
    objective: str
    lam: float
    include_principal: bool
    logs: dict[int, dict[str, np.ndarray]]
    summary: dict
    checkpoints: dict[int, Path]

    def metric_matrix(self, metric: str) -> tuple[np.ndarray, np.ndarray]:
        """(iterations, seeds x iterations matrix) for one log column."""
        if metric not in CSV_COLUMNS or metric in STR_COLUMNS:
            raise KeyError(f"unknown metric column {metric!r}")
        seeds = sorted(self.logs)
        series = [self.logs[s][metric] for s in seeds]
        n = min(len(s) for s in series)
        if n == 0:
            raise SchemaError(f"experiment {self.name} has empty logs")
        matrix = np.stack([s[:n] for s in series])
        return self.logs[seeds[0]]["iteration"][:n], matrix

    def wealth_stats(self) -> dict[str, tuple[float, float]]:
        """Final mean wealth and std per party, principal omitted for NoP runs."""
        parties = PARTY_ORDER if self.include_principal else PARTY_ORDER[:2]
        out = {}
        for party in parties:
            agg = self.summary["wealth"][party]
            out[party] = (float(agg["mean"]), float(agg["std"]))
        return out


@dataclass(frozen=True)
class PlotBundle:
    root: Path
    experiments: dict[str, ExperimentData]

    def experiment(self, name: str) -> ExperimentData:
        if name not in self.experiments:
            raise KeyError(f"bundle has no experiment {name!r}; got {sorted(self.experiments)}")
        return self.experiments[name]


def _load_summary(path: Path) -> dict:
    summary = json.loads(path.read_text())
    _check_version(summary.get("schema_version"), str(path))
    return summary


def _experiment_from_dir(exp_dir: Path) -> ExperimentData:
    summary = _load_summary(exp_dir / "summary.json")
    logs, checkpoints = {}, {}
    for seed in summary["seeds"]:
        if seed in summary.get("failed_seeds", []):
            continue
        seed_dir = exp_dir / f"seed_{seed}"
        logs[int(seed)] = read_log(seed_dir / "log.csv")
        ckpt = seed_dir / "checkpoint.npz"
        if ckpt.exists():
            checkpoints[int(seed)] = ckpt
    return ExperimentData(
        name=summary["name"],
        objective=summary["objective"],
        lam=float(summary["lambda"]),
        include_principal=bool(summary["include_principal"]),
        logs=logs,
        summary=summary,
        checkpoints=checkpoints,
    )


def load_bundle(root) -> PlotBundle:
    """Load a plot-export bundle, or a directory of bare experiment dirs."""
    root = Path(root)
    manifest_path = root / "manifest.json"
    experiments: dict[str, ExperimentData] = {}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
        _check_version(manifest.get("schema_version"), str(manifest_path))
        for entry in manifest["experiments"]:
            exp = _experiment_from_dir(root / entry["name"])
            experiments[exp.name] = exp
    elif (root / "summary.json").exists():
        exp = _experiment_from_dir(root)
        experiments[exp.name] = exp
    else:
        for child in sorted(root.iterdir()):
            if (child / "summary.json").exists():
                exp = _experiment_from_dir(child)
                experiments[exp.name] = exp
    if not experiments:
        raise SchemaError(f"{root} contains no readable experiments")
    return PlotBundle(root=root, experiments=experiments)


# -- checkpoint access ------------------------------------------------------------


@dataclass(frozen=True)
class PrincipalHead:
    """Just enough of a checkpoint to evaluate the principal's contract mean."""

    params: dict[str, np.ndarray]
    obs_dim: int

    def mu(self, obs: np.ndarray) -> np.ndarray:
        p = self.params
        h1 = np.tanh(np.atleast_2d(obs) @ p["W1"] + p["b1"])
        h2 = np.tanh(h1 @ p["W2"] + p["b2"])
        raw = (h2 @ p["Wp"] + p["bp"])[:, 0]
        return 1.0 / (1.0 + np.exp(-raw))


def load_principal_head(path) -> PrincipalHead:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(data["__meta__"].item())
        if "principal" not in meta:
            raise SchemaError(f"{path} holds no principal parameters (fixed-contract run?)")
        params = {
            key.split("/", 1)[1]: np.array(data[key])
            for key in data.files
            if key.startswith("principal/")
        }
    return PrincipalHead(params=params, obs_dim=int(meta["principal"]["obs_dim"]))
