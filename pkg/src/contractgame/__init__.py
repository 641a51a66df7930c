"""Contract-mediated multi-agent reinforcement learning.

A two-agent coin-collection social dilemma wrapped into a principal-agent
game: each step a principal offers both agents the same linear share of
their type-scaled rewards, agents accept-and-move or reject-and-freeze, and
everyone learns by independent PPO. The package also ships the fairness
metrics used to evaluate wealth distributions, an exact tabular solver for
auditing the contract-theory constraints, and an experiment runner that
reproduces the headline comparisons.
"""

from .contracts import (
    ContractStep,
    PAConfig,
    PrincipalView,
    REJECT,
    WealthLedger,
    agent_observation,
    contract_step,
    principal_observation,
)
from .env import CoinColor, EnvConfig, GridState, Move, observe, reset, step
from .metrics import MetricsRow, aie, jain_index, one_minus_gini, rawlsian, welfare
from .nets import ActionSample, PolicyValueNet, agent_sample, principal_sample
from .objectives import ObjectiveSpec, principal_reward
from .ppo import TrainerConfig, TrajectoryBatch, compute_gae, ppo_loss, train

__version__ = "0.1.0"

__all__ = [
    "ActionSample",
    "CoinColor",
    "ContractStep",
    "EnvConfig",
    "GridState",
    "MetricsRow",
    "Move",
    "ObjectiveSpec",
    "PAConfig",
    "PolicyValueNet",
    "PrincipalView",
    "REJECT",
    "TrainerConfig",
    "TrajectoryBatch",
    "WealthLedger",
    "agent_observation",
    "agent_sample",
    "aie",
    "compute_gae",
    "contract_step",
    "jain_index",
    "observe",
    "one_minus_gini",
    "ppo_loss",
    "principal_observation",
    "principal_reward",
    "principal_sample",
    "rawlsian",
    "reset",
    "step",
    "train",
    "welfare",
]
