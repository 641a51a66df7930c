"""Exact solver for tiny contract-mediated Markov games.

For games small enough to enumerate (a handful of states, short horizon,
finite contract grid) this module computes exact best responses by backward
induction and verifies the contract-theory constraints directly:

- limited liability holds whenever every offered share is non-negative,
- a best-responding agent never violates individual rationality, and
- an agent acting greedily on a *corrupted* value table can accept
  contracts with negative expected return, which is the failure mode that
  motivates robustness of contract design to learner estimation error.

Contract schedules here are deterministic per (state, time); stochastic
contract policies are validated elsewhere by Monte-Carlo only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import yaml

__all__ = [
    "REJECT_ACTION",
    "TabularGame",
    "ContractSchedule",
    "ExactSolution",
    "IRViolation",
    "backward_induction",
    "policy_evaluation",
    "reachable_pairs",
    "check_ir",
    "check_ll",
    "greedy_policy",
    "perturb_values",
    "brute_force_values",
    "monte_carlo_value",
    "load_game",
    "parse_game",
]

REJECT_ACTION = "reject"

Joint = tuple[str, ...]
Policy = dict[tuple[str, int], str]


@dataclass(frozen=True)
class TabularGame:
    """Fully enumerated game: states, joint transition table, raw rewards.

    ``actions`` lists each agent's move actions; the reject action is
    implicit and must still be covered by the transition table (a rejecting
    agent is inactive, which is a statement about dynamics the table has to
    encode). Raw rewards are non-negative; entries absent from ``rewards``
    are zero.
    """

    states: tuple[str, ...]
    initial_state: str
    horizon: int
    actions: tuple[tuple[str, ...], ...]
    transitions: dict[tuple[str, Joint], tuple[tuple[float, str], ...]]
    rewards: dict[tuple[str, Joint, str], tuple[float, ...]]
    types: tuple[float, ...]
    cost: float
    contract_grid: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.initial_state not in self.states:
            raise ValueError("initial_state not among states")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.cost < 0:
            raise ValueError("cost must be non-negative")
        if len(self.types) != self.n_agents or any(t <= 0 for t in self.types):
            raise ValueError("need one positive type per agent")
        for s in self.states:
            for joint in self.joint_actions():
                key = (s, joint)
                if key not in self.transitions:
                    raise ValueError(f"transition table missing entry for {key}")
                outcomes = self.transitions[key]
                total = sum(p for p, _ in outcomes)
                if abs(total - 1.0) > 1e-12:
                    raise ValueError(f"transition probabilities at {key} sum to {total}")
                for p, s2 in outcomes:
                    if p < 0 or s2 not in self.states:
                        raise ValueError(f"bad outcome ({p}, {s2}) at {key}")
        for (s, joint, s2), rs in self.rewards.items():
            if len(rs) != self.n_agents:
                raise ValueError(f"reward entry {(s, joint, s2)} has wrong arity")
            if any(r < 0 for r in rs):
                raise ValueError("raw rewards must be non-negative")

    @property
    def n_agents(self) -> int:
        return len(self.actions)

    def action_space(self, agent: int) -> tuple[str, ...]:
        return self.actions[agent] + (REJECT_ACTION,)

    def joint_actions(self):
        return itertools.product(*(self.action_space(i) for i in range(self.n_agents)))

    def raw_reward(self, s: str, joint: Joint, s2: str, agent: int) -> float:
        entry = self.rewards.get((s, joint, s2))
        return 0.0 if entry is None else entry[agent]


@dataclass(frozen=True)
class ContractSchedule:
    """Deterministic share alpha per (state, time); optional constant default."""

    table: dict[tuple[str, int], float] = field(default_factory=dict)
    default: float | None = None

    @classmethod
    def constant(cls, alpha: float) -> "ContractSchedule":
        return cls(default=alpha)

    def alpha(self, state: str, t: int) -> float:
        value = self.table.get((state, t), self.default)
        if value is None:
            raise KeyError(f"schedule has no contract for ({state}, {t})")
        return value


@dataclass(frozen=True)
class ExactSolution:
    """Backward-induction values and the focal agent's best responses."""

    values: dict[tuple[str, int], float]  # defined for t in [0, horizon]
    best_action: Policy

    def policy(self) -> Policy:
        return dict(self.best_action)


@dataclass(frozen=True)
class IRViolation:
    state: str
    t: int
    action: str
    expected_return: float


def _joint_with(
    game: TabularGame, opponents: dict[int, Policy] | None, focal: int,
    s: str, t: int, focal_action: str,
) -> Joint:
    parts = []
    for i in range(game.n_agents):
        if i == focal:
            parts.append(focal_action)
        else:
            if opponents is None or i not in opponents:
                raise ValueError(f"no policy supplied for opponent agent {i}")
            parts.append(opponents[i][(s, t)])
    return tuple(parts)


def _q_value(
    game: TabularGame,
    schedule: ContractSchedule,
    focal: int,
    opponents: dict[int, Policy] | None,
    cont: dict[str, float],
    s: str,
    t: int,
    action: str,
) -> float:
    joint = _joint_with(game, opponents, focal, s, t, action)
    alpha = schedule.alpha(s, t)
    q = 0.0
    for p, s2 in game.transitions[(s, joint)]:
        if action == REJECT_ACTION:
            payoff = 0.0
        else:
            payoff = alpha * game.types[focal] * game.raw_reward(s, joint, s2, focal) - game.cost
        q += p * (payoff + cont[s2])
    return q


def backward_induction(
    game: TabularGame,
    schedule: ContractSchedule,
    focal: int = 0,
    opponents: dict[int, Policy] | None = None,
) -> ExactSolution:
    """Exact dynamic program for the focal agent against fixed opponents.

    Ties at the argmax break toward reject first, then toward the lowest
    action index, so the solution is deterministic.
    """
    values: dict[tuple[str, int], float] = {(s, game.horizon): 0.0 for s in game.states}
    best: Policy = {}
    candidates = (REJECT_ACTION,) + game.actions[focal]
    for t in range(game.horizon - 1, -1, -1):
        cont = {s: values[(s, t + 1)] for s in game.states}
        for s in game.states:
            best_q, best_a = None, None
            for a in candidates:
                q = _q_value(game, schedule, focal, opponents, cont, s, t, a)
                if best_q is None or q > best_q:
                    best_q, best_a = q, a
            values[(s, t)] = best_q
            best[(s, t)] = best_a
    return ExactSolution(values=values, best_action=best)


def policy_evaluation(
    game: TabularGame,
    schedule: ContractSchedule,
    policy: Policy,
    focal: int = 0,
    opponents: dict[int, Policy] | None = None,
) -> dict[tuple[str, int], float]:
    """Exact value of a fixed focal policy at every (state, time)."""
    values: dict[tuple[str, int], float] = {(s, game.horizon): 0.0 for s in game.states}
    for t in range(game.horizon - 1, -1, -1):
        cont = {s: values[(s, t + 1)] for s in game.states}
        for s in game.states:
            values[(s, t)] = _q_value(
                game, schedule, focal, opponents, cont, s, t, policy[(s, t)]
            )
    return values


def reachable_pairs(
    game: TabularGame,
    policy: Policy,
    focal: int = 0,
    opponents: dict[int, Policy] | None = None,
) -> set[tuple[str, int]]:
    """(state, time) pairs visited with positive probability from the start."""
    frontier = {game.initial_state}
    reached = {(game.initial_state, 0)}
    for t in range(game.horizon - 1):
        nxt: set[str] = set()
        for s in frontier:
            joint = _joint_with(game, opponents, focal, s, t, policy[(s, t)])
            for p, s2 in game.transitions[(s, joint)]:
                if p > 0:
                    nxt.add(s2)
        frontier = nxt
        reached |= {(s, t + 1) for s in frontier}
    return reached


def check_ir(
    game: TabularGame,
    schedule: ContractSchedule,
    policy: Policy,
    focal: int = 0,
    opponents: dict[int, Policy] | None = None,
) -> list[IRViolation]:
    """Individual-rationality audit of a focal policy under exact values.

    A violation is a reachable (state, time) where the policy accepts the
    contract although the expected payment-plus-continuation is negative.
    """
    values = policy_evaluation(game, schedule, policy, focal, opponents)
    violations = []
    for s, t in sorted(reachable_pairs(game, policy, focal, opponents), key=lambda p: (p[1], p[0])):
        a = policy[(s, t)]
        if a == REJECT_ACTION:
            continue
        cont = {s2: values[(s2, t + 1)] for s2 in game.states}
        q = _q_value(game, schedule, focal, opponents, cont, s, t, a)
        if q < -1e-12:
            violations.append(IRViolation(state=s, t=t, action=a, expected_return=q))
    return violations


def check_ll(contract_grid) -> bool:
    """Limited liability: payments flow principal-to-agent iff every share >= 0."""
    return all(alpha >= 0 for alpha in contract_grid)


def greedy_policy(
    game: TabularGame,
    schedule: ContractSchedule,
    values: dict[tuple[str, int], float],
    focal: int = 0,
    opponents: dict[int, Policy] | None = None,
) -> Policy:
    """Act greedily on a (possibly corrupted) value table.

    This is how a learning agent with estimate ``values`` would behave;
    with an exact table it reproduces the backward-induction policy.
    """
    policy: Policy = {}
    candidates = (REJECT_ACTION,) + game.actions[focal]
    for t in range(game.horizon - 1, -1, -1):
        cont = {s: values[(s, t + 1)] for s in game.states}
        for s in game.states:
            best_q, best_a = None, None
            for a in candidates:
                q = _q_value(game, schedule, focal, opponents, cont, s, t, a)
                if best_q is None or q > best_q:
                    best_q, best_a = q, a
            policy[(s, t)] = best_a
    return policy


def perturb_values(
    values: dict[tuple[str, int], float],
    magnitude: float,
    rng: np.random.Generator,
) -> dict[tuple[str, int], float]:
    """Additive uniform(-magnitude, magnitude) noise, the estimation-error model."""
    return {k: v + float(rng.uniform(-magnitude, magnitude)) for k, v in values.items()}


def brute_force_values(
    game: TabularGame,
    schedule: ContractSchedule,
    focal: int = 0,
    opponents: dict[int, Policy] | None = None,
) -> dict[tuple[str, int], float]:
    """Optimal values by enumerating every pure focal policy.

    Exponential in states x horizon; this is the independent oracle the
    dynamic program is tested against, so it shares no code path with
    :func:`backward_induction` beyond exact policy evaluation.
    """
    keys = [(s, t) for t in range(game.horizon) for s in game.states]
    candidates = (REJECT_ACTION,) + game.actions[focal]
    best: dict[tuple[str, int], float] = {}
    for choice in itertools.product(candidates, repeat=len(keys)):
        policy = dict(zip(keys, choice))
        values = policy_evaluation(game, schedule, policy, focal, opponents)
        for k in keys:
            if k not in best or values[k] > best[k]:
                best[k] = values[k]
    for s in game.states:
        best[(s, game.horizon)] = 0.0
    return best


def monte_carlo_value(
    game: TabularGame,
    schedule: ContractSchedule,
    policy: Policy,
    n_rollouts: int,
    rng: np.random.Generator,
    focal: int = 0,
    opponents: dict[int, Policy] | None = None,
) -> tuple[float, float]:
    """Sampled return of a policy from the initial state: (mean, std error)."""
    totals = np.zeros(n_rollouts)
    for i in range(n_rollouts):
        s = game.initial_state
        ret = 0.0
        for t in range(game.horizon):
            a = policy[(s, t)]
            joint = _joint_with(game, opponents, focal, s, t, a)
            outcomes = game.transitions[(s, joint)]
            probs = np.array([p for p, _ in outcomes])
            pick = int(rng.choice(len(outcomes), p=probs / probs.sum()))
            p, s2 = outcomes[pick]
            if a != REJECT_ACTION:
                ret += (
                    schedule.alpha(s, t) * game.types[focal] * game.raw_reward(s, joint, s2, focal)
                    - game.cost
                )
            s = s2
        totals[i] = ret
    return float(totals.mean()), float(totals.std(ddof=1) / np.sqrt(n_rollouts))


# -- fixture format ---------------------------------------------------------------


def parse_game(doc: dict) -> tuple[TabularGame, ContractSchedule | None, dict[int, Policy]]:
    """Build a game (plus optional schedule and opponent policies) from a dict.

    See ``configs/oracle_two_state.yaml`` for the reference fixture layout.
    """
    transitions: dict[tuple[str, Joint], tuple[tuple[float, str], ...]] = {}
    rewards: dict[tuple[str, Joint, str], tuple[float, ...]] = {}
    n_agents = len(doc["actions"])
    for entry in doc["transitions"]:
        s = entry["state"]
        joint = tuple(entry["actions"])
        outcomes = []
        for out in entry["outcomes"]:
            outcomes.append((float(out["prob"]), out["next"]))
            rs = out.get("rewards")
            if rs is not None:
                rewards[(s, joint, out["next"])] = tuple(float(r) for r in rs)
        transitions[(s, joint)] = tuple(outcomes)

    game = TabularGame(
        states=tuple(doc["states"]),
        initial_state=doc["initial_state"],
        horizon=int(doc["horizon"]),
        actions=tuple(tuple(a) for a in doc["actions"]),
        transitions=transitions,
        rewards=rewards,
        types=tuple(float(t) for t in doc.get("types", [1.0] * n_agents)),
        cost=float(doc.get("cost", 0.0)),
        contract_grid=tuple(float(a) for a in doc.get("contract_grid", [0.0, 0.5, 1.0])),
    )

    schedule = None
    if "schedule" in doc:
        spec = doc["schedule"]
        table = {
            (row["state"], int(row["t"])): float(row["alpha"])
            for row in spec.get("table", [])
        }
        default = spec.get("constant")
        schedule = ContractSchedule(
            table=table, default=None if default is None else float(default)
        )

    opponents: dict[int, Policy] = {}
    for opp in doc.get("opponents", []):
        agent = int(opp["agent"])
        opponents[agent] = {
            (row["state"], int(row["t"])): row["action"] for row in opp["policy"]
        }
    return game, schedule, opponents


def load_game(path) -> tuple[TabularGame, ContractSchedule | None, dict[int, Policy]]:
    with open(path) as fh:
        return parse_game(yaml.safe_load(fh))
