"""Contract layer wrapping the gridworld into a principal-agent game.

Each timestep the principal offers a single share ``alpha`` to both agents.
An agent either accepts and plays a move, or rejects and freezes for the
step. Accepting agent ``i`` with hidden type ``theta_i`` produces the
effective output ``theta_i * r_i`` from its raw reward ``r_i``; it is paid
``alpha * theta_i * r_i - c`` while the principal keeps
``(1 - alpha) * theta_i * r_i``. The action cost ``c`` is destroyed, not
transferred. Per accepted step the identity

    theta_i * r_i == payment_i + c + principal_share_i

therefore holds exactly (up to float rounding).

Type hiding is structural: everything exported to principal-side code (see
:meth:`ContractStep.principal_view`) carries only the fused product
``theta_i * r_i``, never the type or the raw reward separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import env
from .env import EnvConfig, GridState

__all__ = [
    "REJECT",
    "N_AGENT_ACTIONS",
    "PAConfig",
    "ContractStep",
    "PrincipalView",
    "WealthLedger",
    "contract_step",
    "agent_observation",
    "principal_observation",
    "agent_observation_size",
]

# Agent action convention: indices 0-4 are the five moves, 5 rejects.
REJECT = 5
N_AGENT_ACTIONS = 6


@dataclass(frozen=True)
class PAConfig:
    """Principal-agent game parameterization on top of an :class:`EnvConfig`."""

    env: EnvConfig = field(default_factory=EnvConfig)
    types: tuple[float, float] = (1.25, 0.75)
    action_cost: float = 0.01
    contract_lo: float = 0.0
    contract_hi: float = 1.0

    def __post_init__(self) -> None:
        if len(self.types) != env.N_AGENTS:
            raise ValueError(f"need exactly {env.N_AGENTS} agent types")
        if any(theta <= 0 for theta in self.types):
            raise ValueError("agent types must be positive")
        if self.action_cost < 0:
            raise ValueError("action_cost must be non-negative")
        if not 0.0 <= self.contract_lo <= self.contract_hi <= 1.0:
            raise ValueError("require 0 <= contract_lo <= contract_hi <= 1")


@dataclass(frozen=True)
class PrincipalView:
    """What the principal may see of a step: fused outputs only, no types."""

    alpha: float
    acted: tuple[bool, bool]
    effective_outputs: tuple[float, float]  # theta_i * r_i, 0 for rejecting agents
    principal_income: float


@dataclass(frozen=True)
class ContractStep:
    """One timestep's contract, decisions, and resulting transfers."""

    alpha: float
    actions: tuple[int, int]  # 0-4 move, REJECT (5) otherwise
    raw_rewards: tuple[float, float]
    effective_outputs: tuple[float, float]
    agent_payments: tuple[float, float]
    principal_income: float

    def acted(self, agent: int) -> bool:
        return self.actions[agent] != REJECT

    def principal_view(self) -> PrincipalView:
        return PrincipalView(
            alpha=self.alpha,
            acted=(self.acted(0), self.acted(1)),
            effective_outputs=self.effective_outputs,
            principal_income=self.principal_income,
        )


@dataclass
class WealthLedger:
    """Per-episode cumulative wealth of every party.

    Principal wealth always accumulates the unregularized contract income,
    regardless of the reward the principal learns from.
    """

    agent_wealth: list[float] = field(default_factory=lambda: [0.0] * env.N_AGENTS)
    principal_wealth: float = 0.0

    def apply(self, step: ContractStep) -> None:
        for i in range(env.N_AGENTS):
            self.agent_wealth[i] += step.agent_payments[i]
        self.principal_wealth += step.principal_income

    def wealth_vector(self, include_principal: bool = True) -> np.ndarray:
        parties = list(self.agent_wealth)
        if include_principal:
            parties.append(self.principal_wealth)
        return np.asarray(parties, dtype=np.float64)


def contract_step(
    config: PAConfig,
    state: GridState,
    alpha: float,
    actions: tuple[int, int],
    rng: np.random.Generator,
    ledger: WealthLedger | None = None,
) -> tuple[GridState, ContractStep]:
    """Apply one contracted timestep and compute all transfers.

    ``actions`` follow the agent convention (moves 0-4, ``REJECT`` = 5).
    Rejecting agents are passed to the environment as inactive. ``alpha``
    must already lie within the configured contract bounds; an out-of-range
    value is a caller bug (the principal policy clips before offering).
    If ``ledger`` is given it is updated in place.
    """
    if not config.contract_lo <= alpha <= config.contract_hi:
        raise ValueError(
            f"alpha={alpha} outside contract bounds "
            f"[{config.contract_lo}, {config.contract_hi}]"
        )
    moves = tuple(None if a == REJECT else a for a in actions)
    next_state, raw = env.step(config.env, state, moves, rng)

    payments = [0.0, 0.0]
    outputs = [0.0, 0.0]
    income = 0.0
    for i in range(env.N_AGENTS):
        if actions[i] == REJECT:
            continue
        outputs[i] = config.types[i] * raw[i]
        payments[i] = alpha * outputs[i] - config.action_cost
        income += (1.0 - alpha) * outputs[i]

    step = ContractStep(
        alpha=alpha,
        actions=(actions[0], actions[1]),
        raw_rewards=raw,
        effective_outputs=(outputs[0], outputs[1]),
        agent_payments=(payments[0], payments[1]),
        principal_income=income,
    )
    if ledger is not None:
        ledger.apply(step)
    return next_state, step


def agent_observation_size(config: PAConfig) -> int:
    return env.observation_size(config.env) + 1


def agent_observation(config: PAConfig, state: GridState, alpha: float) -> np.ndarray:
    """Agents see the shared grid encoding plus the offered contract."""
    obs = env.observe(config.env, state)
    return np.concatenate([obs, [alpha]])


def principal_observation(config: PAConfig, state: GridState) -> np.ndarray:
    """The principal acts before agents respond, so it sees the grid alone."""
    return env.observe(config.env, state)
