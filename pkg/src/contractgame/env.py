"""Two-player coin-collection gridworld.

A red and a blue agent move on a small square grid on which a single coin
(red or blue) is always present. An agent that lands on the coin collects
it: a matching color is worth ``match_reward``, a mismatch is still worth
``mismatch_reward``, and the coin immediately respawns on a cell occupied
by neither agent. If both agents land on the coin in the same step, the
collector is chosen uniformly at random.

Dynamics conventions (deliberately simple and stated so results are
self-consistent):

- moves off the edge clamp to the boundary (no wrap-around),
- both agents may occupy the same cell; only coin collection is contested,
- moves are simultaneous: both actions are applied to the pre-move state,
- an inactive agent (``None`` action, used when a contract is rejected
  upstream) keeps its position for the step.

State is explicit and immutable; all randomness comes from the generator
passed in, so instances are trivially independent and reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

__all__ = [
    "Move",
    "CoinColor",
    "EnvConfig",
    "GridState",
    "reset",
    "step",
    "observe",
    "spawn_coin",
    "observation_size",
]


class Move(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3
    STAY = 4


class CoinColor(IntEnum):
    RED = 0
    BLUE = 1


# Indexed by Move value; also accepts plain ints on the hot path.
_MOVE_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1), (0, 0))

N_AGENTS = 2


@dataclass(frozen=True)
class EnvConfig:
    """Gridworld parameterization: board size, horizon, and coin rewards."""

    grid_size: int = 3
    episode_length: int = 100
    match_reward: float = 1.0
    mismatch_reward: float = 0.2
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2 so the coin has a free cell")
        if self.episode_length <= 0:
            raise ValueError("episode_length must be positive")
        if not 0.0 <= self.mismatch_reward <= self.match_reward:
            raise ValueError("require 0 <= mismatch_reward <= match_reward")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be a non-negative integer")


@dataclass(frozen=True)
class GridState:
    """Full, shared game state at one timestep."""

    red_pos: tuple[int, int]
    blue_pos: tuple[int, int]
    coin_pos: tuple[int, int]
    coin_color: CoinColor
    t: int

    def agent_pos(self, agent: int) -> tuple[int, int]:
        return self.red_pos if agent == 0 else self.blue_pos


def _as_rng(rng: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def spawn_coin(
    config: EnvConfig,
    red_pos: tuple[int, int],
    blue_pos: tuple[int, int],
    rng: np.random.Generator,
) -> tuple[tuple[int, int], CoinColor]:
    """Place a fresh coin uniformly on a cell occupied by neither agent."""
    g = config.grid_size
    occupied = {red_pos, blue_pos}
    free = [(r, c) for r in range(g) for c in range(g) if (r, c) not in occupied]
    pos = free[int(rng.integers(len(free)))]
    color = CoinColor(int(rng.integers(N_AGENTS)))
    return pos, color


def reset(config: EnvConfig, rng: int | np.random.Generator | None = None) -> GridState:
    """Start an episode: agents on distinct random cells, coin on a free cell.

    ``rng`` may be a seed or a generator; ``None`` falls back to
    ``config.rng_seed``. The same seed always yields the same state.
    """
    rng = _as_rng(config.rng_seed if rng is None else rng)
    g = config.grid_size
    cells = rng.choice(g * g, size=N_AGENTS, replace=False)
    red_pos = (int(cells[0]) // g, int(cells[0]) % g)
    blue_pos = (int(cells[1]) // g, int(cells[1]) % g)
    coin_pos, coin_color = spawn_coin(config, red_pos, blue_pos, rng)
    return GridState(red_pos, blue_pos, coin_pos, coin_color, t=0)


def _apply_move(config: EnvConfig, pos: tuple[int, int], move: Move | int) -> tuple[int, int]:
    dr, dc = _MOVE_DELTAS[move]
    hi = config.grid_size - 1
    return (min(max(pos[0] + dr, 0), hi), min(max(pos[1] + dc, 0), hi))


def step(
    config: EnvConfig,
    state: GridState,
    moves: tuple[Move | int | None, Move | int | None],
    rng: np.random.Generator,
) -> tuple[GridState, tuple[float, float]]:
    """Advance one timestep; ``None`` marks an inactive agent.

    Returns the successor state and the raw reward pair (red, blue). At most
    one agent is rewarded per step: the coin's collector. Ties are broken
    uniformly at random, and a collected coin respawns immediately.
    """
    if state.t >= config.episode_length:
        raise ValueError(f"episode is over (t={state.t} >= T={config.episode_length})")

    positions = [state.red_pos, state.blue_pos]
    for i, move in enumerate(moves):
        if move is not None:
            positions[i] = _apply_move(config, positions[i], move)

    rewards = [0.0, 0.0]
    coin_pos, coin_color = state.coin_pos, state.coin_color
    landed = [i for i in range(N_AGENTS) if positions[i] == state.coin_pos]
    if landed:
        collector = landed[0] if len(landed) == 1 else landed[int(rng.integers(2))]
        matched = collector == int(state.coin_color)
        rewards[collector] = config.match_reward if matched else config.mismatch_reward
        coin_pos, coin_color = spawn_coin(config, positions[0], positions[1], rng)

    next_state = GridState(positions[0], positions[1], coin_pos, coin_color, t=state.t + 1)
    return next_state, (rewards[0], rewards[1])


def observation_size(config: EnvConfig) -> int:
    return 4 * config.grid_size * config.grid_size


def observe(config: EnvConfig, state: GridState) -> np.ndarray:
    """Encode the state as four flattened one-hot planes.

    Plane order: red agent, blue agent, red coin, blue coin, each of length
    ``grid_size**2``. The encoding is shared by every learner.
    """
    g = config.grid_size
    n = g * g
    obs = np.zeros(4 * n, dtype=np.float64)
    obs[state.red_pos[0] * g + state.red_pos[1]] = 1.0
    obs[n + state.blue_pos[0] * g + state.blue_pos[1]] = 1.0
    coin_plane = 2 if state.coin_color == CoinColor.RED else 3
    obs[coin_plane * n + state.coin_pos[0] * g + state.coin_pos[1]] = 1.0
    return obs
