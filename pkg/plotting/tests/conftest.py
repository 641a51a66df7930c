"""Synthetic experiment bundles, written directly in the on-disk formats.

The plotting package only ever consumes files, so fixtures fabricate those
files byte by byte: CSV logs with the fixed 17-column schema, summary JSON,
a manifest, and principal checkpoints in the documented npz layout.
"""

import io
import json
from pathlib import Path

import numpy as np
import pytest

CSV_COLUMNS = (
    "iteration,seed,objective,lambda,mean_alpha,reject_rate_red,reject_rate_blue,"
    "wealth_red,wealth_blue,wealth_principal,welfare,one_minus_gini,rawlsian,aie,"
    "kl_principal,entropy_red,entropy_blue"
)


def write_log(path: Path, seed: int, objective: str, lam: float, wealth_targets, n=60, jitter=0.0):
    """A plausible learning curve: wealths ease toward their targets."""
    rng = np.random.default_rng(seed)
    lines = [CSV_COLUMNS]
    for it in range(n):
        frac = (it + 1) / n
        wealths = [t * frac + jitter * rng.standard_normal() for t in wealth_targets]
        welfare = sum(wealths)
        mean = welfare / len(wealths)
        if mean > 0:
            diffs = sum(abs(a - b) for a in wealths for b in wealths)
            gini = 1.0 - diffs / (2 * len(wealths) ** 2 * mean)
        else:
            gini = float("nan")
        aie = gini * welfare
        w_p = wealths[2] if len(wealths) > 2 else 0.0
        row = [
            it, seed, objective, lam, 0.6, 0.05, 0.05,
            wealths[0], wealths[1], w_p,
            welfare, gini, min(wealths), aie, 0.001, 1.0, 1.0,
        ]
        lines.append(",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def write_checkpoint(path: Path, obs_dim=36, seed=0, include_principal=True):
    rng = np.random.default_rng(seed)
    meta, arrays = {}, {}

    def add(name, obs_d, kind, n_actions):
        meta[name] = {"obs_dim": obs_d, "kind": kind, "n_actions": n_actions}
        arrays[f"{name}/W1"] = rng.standard_normal((obs_d, 64)) * 0.3
        arrays[f"{name}/b1"] = np.zeros(64)
        arrays[f"{name}/W2"] = rng.standard_normal((64, 64)) * 0.2
        arrays[f"{name}/b2"] = np.zeros(64)
        arrays[f"{name}/Wp"] = rng.standard_normal((64, n_actions)) * 0.1
        arrays[f"{name}/bp"] = np.zeros(n_actions)
        arrays[f"{name}/Wv"] = rng.standard_normal((64, 1))
        arrays[f"{name}/bv"] = np.zeros(1)
        if kind == "gaussian":
            arrays[f"{name}/log_sigma"] = np.array(-1.6)

    add("red", obs_dim + 1, "categorical", 6)
    add("blue", obs_dim + 1, "categorical", 6)
    if include_principal:
        add("principal", obs_dim, "gaussian", 1)

    buf = io.BytesIO()
    np.savez(buf, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)
    path.write_bytes(buf.getvalue())


def agg(values):
    arr = np.asarray(values, dtype=float)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "std": std, "values": [float(v) for v in arr]}


def write_experiment(root: Path, name, objective, lam, per_seed_wealths,
                     include_principal=True, with_checkpoints=True, schema_version=1):
    exp_dir = root / name
    exp_dir.mkdir(parents=True, exist_ok=True)
    seeds = sorted(per_seed_wealths)
    finals = {"red": [], "blue": [], "principal": []}
    metrics = {"one_minus_gini": [], "welfare": [], "rawlsian": [], "aie": []}
    for seed in seeds:
        wealths = per_seed_wealths[seed]
        write_log(exp_dir / f"seed_{seed}" / "log.csv", seed, objective, lam, wealths)
        if with_checkpoints:
            write_checkpoint(
                exp_dir / f"seed_{seed}" / "checkpoint.npz",
                seed=seed,
                include_principal=include_principal,
            )
        finals["red"].append(wealths[0])
        finals["blue"].append(wealths[1])
        finals["principal"].append(wealths[2] if len(wealths) > 2 else 0.0)
        welfare = sum(wealths)
        mean = welfare / len(wealths)
        diffs = sum(abs(a - b) for a in wealths for b in wealths)
        gini = 1.0 - diffs / (2 * len(wealths) ** 2 * mean) if mean > 0 else float("nan")
        metrics["one_minus_gini"].append(gini)
        metrics["welfare"].append(welfare)
        metrics["rawlsian"].append(min(wealths))
        metrics["aie"].append(gini * welfare)
    summary = {
        "schema_version": schema_version,
        "name": name,
        "objective": objective,
        "lambda": lam,
        "include_principal": include_principal,
        "seeds": seeds,
        "iterations": 60,
        "eval_window_fraction": 0.05,
        "metrics": {k: agg(v) for k, v in metrics.items()},
        "wealth": {k: agg(v) for k, v in finals.items()},
        "mean_alpha": agg([0.6] * len(seeds)),
        "per_seed": {},
        "flags": [],
        "failed_seeds": [],
    }
    (exp_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return exp_dir


def write_manifest(root: Path, names):
    manifest = {"schema_version": 1, "experiments": []}
    for name in names:
        summary = json.loads((root / name / "summary.json").read_text())
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
            entry["logs"][str(seed)] = f"{name}/seed_{seed}/log.csv"
            if (root / name / f"seed_{seed}" / "checkpoint.npz").exists():
                entry["checkpoints"][str(seed)] = f"{name}/seed_{seed}/checkpoint.npz"
        manifest["experiments"].append(entry)
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return root


@pytest.fixture
def vr_bundle(tmp_path):
    """Three near-equal parties, the variance-regularized outcome."""
    root = tmp_path / "bundle"
    write_experiment(
        root, "vr_1", "vr", 1.0,
        {0: (15.2, 14.6, 15.5), 1: (15.0, 14.1, 16.0), 2: (14.8, 15.3, 15.1)},
    )
    return write_manifest(root, ["vr_1"])


@pytest.fixture
def greedy_bundle(tmp_path):
    """Principal hoards nearly everything, the unregularized outcome."""
    root = tmp_path / "bundle_greedy"
    write_experiment(
        root, "greedy", "greedy", 0.0,
        {0: (0.9, 0.4, 7.6), 1: (1.2, 0.2, 6.8), 2: (0.7, 0.6, 8.1)},
    )
    return write_manifest(root, ["greedy"])


@pytest.fixture
def nop_bundle(tmp_path):
    root = tmp_path / "bundle_nop"
    write_experiment(
        root, "nop", "nop", 0.0,
        {0: (27.0, 18.5), 1: (26.5, 18.1), 2: (27.8, 18.9)},
        include_principal=False,
    )
    return write_manifest(root, ["nop"])
