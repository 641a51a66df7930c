"""Principal reward schemes: NoP, Greedy, Fix, and the two regularizers.

The scheme only changes the reward the *principal* learns from. Agents are
always paid per the contract layer, and the wealth ledger always tracks the
principal's unregularized income, so all five schemes are directly
comparable on the same metrics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contracts import PrincipalView, WealthLedger
from .metrics import jain_index, one_minus_gini

__all__ = ["ObjectiveSpec", "principal_reward", "FAIRNESS_FUNCTIONS"]

KINDS = ("nop", "greedy", "fix", "wr", "vr")


def _neg_variance(wealths: np.ndarray) -> float:
    return -float(np.var(wealths))  # population variance over the n+1 parties


def _jain(wealths: np.ndarray) -> float:
    return jain_index(wealths)


def _neg_gini(wealths: np.ndarray) -> float:
    g = one_minus_gini(wealths)
    if g != g:  # undefined at non-positive mean wealth; contribute nothing
        return 0.0
    return g - 1.0


# Equity measures usable inside the VR scheme; higher is fairer. Negative
# variance is the default, the others sit behind the same interface.
FAIRNESS_FUNCTIONS = {
    "variance": _neg_variance,
    "jain": _jain,
    "gini": _neg_gini,
}


@dataclass(frozen=True)
class ObjectiveSpec:
    """Which reward the principal optimizes, and its altruism weight.

    kinds:
      - ``nop``:    no principal, contract pinned at alpha = 1
      - ``greedy``: learned principal, pure contract income
      - ``fix``:    contract pinned at ``alpha_const`` (default 2/3)
      - ``wr``:     income plus ``lam`` times the agents' effective outputs
      - ``vr``:     income plus ``lam`` times a fairness score of the
                    cumulative wealth of all parties (default: -variance)
    """

    kind: str = "greedy"
    lam: float = 0.0
    alpha_const: float = 2.0 / 3.0
    fairness: str = "variance"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown objective kind {self.kind!r}, expected one of {KINDS}")
        if self.lam < 0:
            raise ValueError("altruism weight lam must be >= 0")
        if not 0.0 <= self.alpha_const <= 1.0:
            raise ValueError("alpha_const must lie in [0, 1]")
        if self.fairness not in FAIRNESS_FUNCTIONS:
            raise ValueError(f"unknown fairness function {self.fairness!r}")

    @property
    def learns_principal(self) -> bool:
        """Fix and NoP pin the contract, so there is nothing to learn."""
        return self.kind in ("greedy", "wr", "vr")

    @property
    def fixed_alpha(self) -> float | None:
        if self.kind == "nop":
            return 1.0
        if self.kind == "fix":
            return self.alpha_const
        return None

    @property
    def include_principal_in_metrics(self) -> bool:
        """Without a principal there are only two parties to meter."""
        return self.kind != "nop"


def principal_reward(spec: ObjectiveSpec, view: PrincipalView, ledger: WealthLedger) -> float:
    """Reward the principal learns from at one step.

    ``ledger`` must already include this step's transfers (cumulative wealth
    through time t inclusive); only the VR scheme reads it. The view exposes
    fused outputs only, so no scheme can condition on agent types.
    """
    if spec.kind in ("nop", "greedy", "fix"):
        return view.principal_income
    if spec.kind == "wr":
        bonus = sum(out for out, acted in zip(view.effective_outputs, view.acted) if acted)
        return view.principal_income + spec.lam * bonus
    # vr: fairness of cumulative wealth across all n+1 parties
    fairness = FAIRNESS_FUNCTIONS[spec.fairness]
    return view.principal_income + spec.lam * fairness(ledger.wealth_vector())
