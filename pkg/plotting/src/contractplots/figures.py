"""Figure builders: learning curves, final wealth spread, contract heatmaps.

Rendering is deliberately timestamp-free and style-pinned so that identical
inputs produce identical image bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bundle import ExperimentData, PlotBundle, load_principal_head

METRIC_LABELS = {
    "welfare": "Welfare",
    "one_minus_gini": "1 - Gini",
    "rawlsian": "Rawlsian",
    "aie": "AIE",
    "mean_alpha": "Mean contract share",
    "wealth_red": "Red agent wealth",
    "wealth_blue": "Blue agent wealth",
    "wealth_principal": "Principal wealth",
}

PARTY_COLORS = {"red": "tab:red", "blue": "tab:blue", "principal": "tab:green"}


def _smooth(series: np.ndarray, window: int | None) -> np.ndarray:
    if not window or window <= 1:
        return series
    kernel = np.ones(window) / window
    padded = np.concatenate([np.repeat(series[:1], window - 1), series])
    return np.convolve(padded, kernel, mode="valid")


def _save(fig, out_path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, format=out_path.suffix.lstrip(".") or "png", dpi=120)
    plt.close(fig)
    return out_path


def curves_figure(bundle: PlotBundle, metric: str, smooth_window: int | None = None):
    """Mean-over-seeds line with a +/-1 std shaded band, per experiment."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name in sorted(bundle.experiments):
        exp = bundle.experiments[name]
        iterations, matrix = exp.metric_matrix(metric)
        mean = _smooth(matrix.mean(axis=0), smooth_window)
        std = _smooth(matrix.std(axis=0), smooth_window)
        ax.plot(iterations, mean, label=name)
        ax.fill_between(iterations, mean - std, mean + std, alpha=0.25, linewidth=0)
    ax.set_xlabel("iteration")
    ax.set_ylabel(METRIC_LABELS.get(metric, metric))
    ax.legend(loc="best")
    fig.tight_layout()
    return fig


def plot_curves(bundle: PlotBundle, metric: str, out_path, smooth_window: int | None = None) -> Path:
    return _save(curves_figure(bundle, metric, smooth_window), out_path)


def wealth_curves_figure(exp: ExperimentData):
    """Per-party wealth over training for a single experiment."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    parties = ("red", "blue", "principal") if exp.include_principal else ("red", "blue")
    for party in parties:
        iterations, matrix = exp.metric_matrix(f"wealth_{party}")
        mean = matrix.mean(axis=0)
        std = matrix.std(axis=0)
        color = PARTY_COLORS[party]
        ax.plot(iterations, mean, label=party, color=color)
        ax.fill_between(iterations, mean - std, mean + std, alpha=0.25, linewidth=0, color=color)
    ax.set_xlabel("iteration")
    ax.set_ylabel("wealth")
    ax.set_title(exp.name)
    ax.legend(loc="best")
    fig.tight_layout()
    return fig


def plot_wealth_curves(exp: ExperimentData, out_path) -> Path:
    return _save(wealth_curves_figure(exp), out_path)


def wealth_spread_figure(bundle: PlotBundle):
    """Grouped bars of final mean wealth per party with std whiskers."""
    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * len(bundle.experiments), 4.0))
    names = sorted(bundle.experiments)
    width = 0.26
    for i, name in enumerate(names):
        exp = bundle.experiments[name]
        stats = exp.wealth_stats()
        offsets = np.linspace(-width, width, num=len(stats))
        for off, (party, (mean, std)) in zip(offsets, stats.items()):
            ax.bar(
                i + off,
                mean,
                width=width * 0.95,
                yerr=std,
                capsize=3,
                color=PARTY_COLORS[party],
                label=party if i == 0 else None,
            )
    ax.set_xticks(range(len(names)), names)
    ax.set_ylabel("final wealth")
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.legend(loc="best")
    fig.tight_layout()
    return fig


def plot_wealth_spread(bundle: PlotBundle, out_path) -> Path:
    return _save(wealth_spread_figure(bundle), out_path)


# -- contract heatmaps --------------------------------------------------------------


def _grid_observation(grid: int, red: int, blue: int, coin: int, coin_is_red: bool) -> np.ndarray:
    n = grid * grid
    obs = np.zeros(4 * n)
    obs[red] = 1.0
    obs[n + blue] = 1.0
    obs[(2 if coin_is_red else 3) * n + coin] = 1.0
    return obs


def contract_heatmap_figure(checkpoint_path, grid: int = 3):
    """Mean offered share over all agent placements, one panel per coin setup.

    Panels fix the coin (center or corner, red or blue) and sweep the red
    agent's cell (rows) against the blue agent's cell (columns); placements
    where an agent would sit on the coin are masked out.
    """
    head = load_principal_head(checkpoint_path)
    n = grid * grid
    if head.obs_dim != 4 * n:
        raise ValueError(f"checkpoint expects obs_dim {head.obs_dim}, grid {grid} gives {4 * n}")
    panels = [
        (n // 2, True, "red coin, center"),
        (n // 2, False, "blue coin, center"),
        (0, True, "red coin, corner"),
        (0, False, "blue coin, corner"),
    ]
    fig, axes = plt.subplots(2, 2, figsize=(9.0, 8.0))
    for ax, (coin, coin_is_red, title) in zip(axes.ravel(), panels):
        values = np.full((n, n), np.nan)
        obs_rows = []
        keys = []
        for red in range(n):
            for blue in range(n):
                if red == coin or blue == coin:
                    continue
                obs_rows.append(_grid_observation(grid, red, blue, coin, coin_is_red))
                keys.append((red, blue))
        mu = head.mu(np.stack(obs_rows))
        for (red, blue), m in zip(keys, mu):
            values[red, blue] = m
        im = ax.imshow(values, vmin=0.0, vmax=1.0, cmap="viridis")
        ax.set_title(title)
        ax.set_xlabel("blue agent cell")
        ax.set_ylabel("red agent cell")
        fig.colorbar(im, ax=ax, fraction=0.046)
    fig.suptitle("Mean contract share offered by the principal")
    fig.tight_layout()
    return fig


def plot_contract_heatmap(checkpoint_path, out_path, grid: int = 3) -> Path:
    return _save(contract_heatmap_figure(checkpoint_path, grid), out_path)
