"""Figures for contract-game experiment bundles."""

from .bundle import ExperimentData, PlotBundle, SchemaError, load_bundle, load_principal_head
from .figures import (
    plot_contract_heatmap,
    plot_curves,
    plot_wealth_curves,
    plot_wealth_spread,
)

__version__ = "0.1.0"

__all__ = [
    "ExperimentData",
    "PlotBundle",
    "SchemaError",
    "load_bundle",
    "load_principal_head",
    "plot_contract_heatmap",
    "plot_curves",
    "plot_wealth_curves",
    "plot_wealth_spread",
]
