"""Policy-gradient training loop for the principal-agent game.

One iteration collects a fixed batch of complete episodes under frozen
policy snapshots, estimates advantages with GAE, then runs several epochs
of minibatch PPO per learner. Agents always learn from their contractual
payments; the principal (when it learns at all) learns from the reward its
objective scheme produces. The principal deliberately trains with a smaller
learning rate than the agents so it cannot outrun their ability to start
rejecting unfair offers.

All randomness is derived from the master seed: per-episode generator
streams are spawned by a global episode counter, so a run is reproducible
regardless of how episode collection is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import env as env_mod
from .contracts import (
    N_AGENT_ACTIONS,
    PAConfig,
    REJECT,
    WealthLedger,
    contract_step,
)
from .metrics import MetricsRow
from .nets import (
    PolicyValueNet,
    gaussian_log_prob,
    log_softmax,
    save_checkpoint,
)
from .objectives import ObjectiveSpec, principal_reward

__all__ = [
    "TrainerConfig",
    "TrajectoryBatch",
    "Learner",
    "Adam",
    "compute_gae",
    "ppo_loss",
    "PPOLossResult",
    "collect_rollouts",
    "train",
    "TrainResult",
    "make_learners",
]

AGENT_NAMES = ("red", "blue")


@dataclass(frozen=True)
class TrainerConfig:
    """PPO hyperparameters; defaults follow the tuned training setup."""

    lr_principal: float = 2e-4
    lr_agent: float = 5e-4
    entropy_cost_principal: float = 1e-5
    entropy_cost_agent: float = 1e-3
    gae_lambda: float = 0.95
    kl_beta0_principal: float = 1.0
    kl_beta0_agent: float = 0.0
    kl_target: float = 1e-2
    clip_eps: float = 0.2
    baseline_coef: float = 0.5
    batch_size: int = 1600
    episode_length: int = 100
    gamma: float = 1.0
    epochs_per_update: int = 4
    minibatch_size: int = 400
    seed: int = 0

    def __post_init__(self) -> None:
        if self.batch_size <= 0 or self.episode_length <= 0:
            raise ValueError("batch_size and episode_length must be positive")
        if self.batch_size % self.episode_length != 0:
            raise ValueError("batch_size must be a whole number of episodes")
        if not 0 < self.minibatch_size <= self.batch_size:
            raise ValueError("minibatch_size must lie in (0, batch_size]")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    @property
    def episodes_per_batch(self) -> int:
        return self.batch_size // self.episode_length


@dataclass
class TrajectoryBatch:
    """Flattened, episode-contiguous rollout storage for one learner.

    ``actions`` hold move/reject indices for agents and pre-clip contract
    draws for the principal. Behavior-policy distributions are stored in
    full (categorical log-probabilities, or Gaussian mean and shared sigma)
    so the PPO KL term is exact rather than sample-estimated.
    """

    obs: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    dones: np.ndarray
    behavior_logp_all: np.ndarray | None = None  # categorical
    behavior_mu: np.ndarray | None = None  # gaussian
    behavior_sigma: float | None = None
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None

    def __len__(self) -> int:
        return self.obs.shape[0]

    def take(self, idx: np.ndarray) -> "TrajectoryBatch":
        return TrajectoryBatch(
            obs=self.obs[idx],
            actions=self.actions[idx],
            log_probs=self.log_probs[idx],
            rewards=self.rewards[idx],
            values=self.values[idx],
            dones=self.dones[idx],
            behavior_logp_all=None
            if self.behavior_logp_all is None
            else self.behavior_logp_all[idx],
            behavior_mu=None if self.behavior_mu is None else self.behavior_mu[idx],
            behavior_sigma=self.behavior_sigma,
            advantages=None if self.advantages is None else self.advantages[idx],
            returns=None if self.returns is None else self.returns[idx],
        )


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation over episode-contiguous arrays.

    ``dones[t]`` marks the final step of an episode; the bootstrap value
    after a terminal step is 0 (finite horizon). Returns are advantages
    plus the value estimates.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    if not (rewards.shape == values.shape == dones.shape) or rewards.ndim != 1:
        raise ValueError("rewards, values and dones must be aligned 1-D arrays")
    if rewards.size and not dones[-1]:
        raise ValueError("batch must end on an episode boundary")
    adv = np.zeros_like(rewards)
    gae = 0.0
    for t in range(rewards.size - 1, -1, -1):
        next_value = 0.0 if dones[t] else values[t + 1]
        delta = rewards[t] + gamma * next_value - values[t]
        gae = delta + gamma * lam * (0.0 if dones[t] else gae)
        adv[t] = gae
    return adv, adv + values


class Adam:
    """Adaptive moment estimation over a parameter dict (default decays)."""

    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1**self.t
        bias2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * (g * g)
            update = self.lr * (self.m[k] / bias1) / (np.sqrt(self.v[k] / bias2) + self.eps)
            params[k] = params[k] - update


@dataclass
class Learner:
    """One independently learning party: net, optimizer, and PPO knobs."""

    name: str
    role: str  # "agent" or "principal"
    net: PolicyValueNet
    adam: Adam
    entropy_cost: float
    kl_beta: float
    kl_beta0: float
    agent_index: int | None = None


@dataclass
class PPOLossResult:
    loss: float
    grads: dict[str, np.ndarray]
    policy_loss: float
    value_loss: float
    kl: float
    entropy: float
    clip_frac: float


def _surrogate_and_drho(
    rho: np.ndarray, adv: np.ndarray, clip_eps: float
) -> tuple[np.ndarray, np.ndarray]:
    unclipped = rho * adv
    clipped = np.clip(rho, 1.0 - clip_eps, 1.0 + clip_eps) * adv
    surr = np.minimum(unclipped, clipped)
    inside = (rho > 1.0 - clip_eps) & (rho < 1.0 + clip_eps)
    d_rho = np.where(unclipped <= clipped, adv, adv * inside)
    return surr, d_rho


def ppo_loss(
    net: PolicyValueNet,
    minibatch: TrajectoryBatch,
    cfg: TrainerConfig,
    entropy_cost: float,
    beta: float,
) -> PPOLossResult:
    """Clipped-surrogate PPO loss with KL penalty, entropy bonus and value term.

    Computes the scalar loss and its exact parameter gradients in one pass.
    A non-finite loss aborts the update with a diagnostic summary.
    """
    m = len(minibatch)
    adv = minibatch.advantages
    fwd = net.forward(minibatch.obs)

    if net.kind == "categorical":
        logp_all = log_softmax(fwd.policy_out)
        probs = np.exp(logp_all)
        rows = np.arange(m)
        actions = minibatch.actions.astype(int)
        lp = logp_all[rows, actions]
        rho = np.exp(lp - minibatch.log_probs)
        surr, d_rho = _surrogate_and_drho(rho, adv, cfg.clip_eps)
        old_logp_all = minibatch.behavior_logp_all
        old_probs = np.exp(old_logp_all)
        kl_rows = (old_probs * (old_logp_all - logp_all)).sum(axis=1)
        ent_rows = -(probs * logp_all).sum(axis=1)

        d_lp = -(d_rho * rho) / m
        one_hot = np.zeros_like(probs)
        one_hot[rows, actions] = 1.0
        d_logits = d_lp[:, None] * (one_hot - probs)
        d_logits += beta * (probs - old_probs) / m
        d_logits += entropy_cost * probs * (logp_all + ent_rows[:, None]) / m
        d_sigma = 0.0
        d_policy = d_logits
    else:
        mu = fwd.mu
        sigma = fwd.sigma
        x = minibatch.actions
        lp = gaussian_log_prob(x, mu, sigma)
        rho = np.exp(lp - minibatch.log_probs)
        surr, d_rho = _surrogate_and_drho(rho, adv, cfg.clip_eps)
        mu0 = minibatch.behavior_mu
        sigma0 = minibatch.behavior_sigma
        kl_rows = (
            math.log(sigma / sigma0)
            + (sigma0**2 + (mu0 - mu) ** 2) / (2.0 * sigma**2)
            - 0.5
        )
        ent_rows = np.full(m, math.log(sigma) + 0.5 * math.log(2.0 * math.pi * math.e))

        d_lp = -(d_rho * rho) / m
        d_mu = d_lp * (x - mu) / sigma**2
        d_sigma = float((d_lp * ((x - mu) ** 2 / sigma**3 - 1.0 / sigma)).sum())
        d_mu += beta * (mu - mu0) / sigma**2 / m
        d_sigma += beta * float((1.0 / sigma - (sigma0**2 + (mu0 - mu) ** 2) / sigma**3).sum()) / m
        d_sigma += -entropy_cost / sigma
        d_policy = (d_mu * mu * (1.0 - mu))[:, None]

    v_err = fwd.value - minibatch.returns
    value_loss = float((v_err**2).mean())
    policy_loss = -float(surr.mean())
    kl = float(kl_rows.mean())
    entropy = float(ent_rows.mean())
    loss = policy_loss + beta * kl - entropy_cost * entropy + cfg.baseline_coef * value_loss
    if not math.isfinite(loss):
        raise FloatingPointError(
            "non-finite PPO loss: "
            f"policy={policy_loss} value={value_loss} kl={kl} entropy={entropy} "
            f"rho_max={float(np.abs(rho).max())} adv_max={float(np.abs(adv).max())}"
        )

    d_value = 2.0 * cfg.baseline_coef * v_err / m
    grads = net.backward(fwd, d_policy, d_value, d_sigma)
    clip_frac = float(((rho < 1.0 - cfg.clip_eps) | (rho > 1.0 + cfg.clip_eps)).mean())
    return PPOLossResult(loss, grads, policy_loss, value_loss, kl, entropy, clip_frac)


def measured_kl(net: PolicyValueNet, batch: TrajectoryBatch) -> float:
    """Exact mean KL(behavior || current) over a full batch."""
    fwd = net.forward(batch.obs)
    if net.kind == "categorical":
        logp_all = log_softmax(fwd.policy_out)
        old_probs = np.exp(batch.behavior_logp_all)
        return float((old_probs * (batch.behavior_logp_all - logp_all)).sum(axis=1).mean())
    sigma, mu = fwd.sigma, fwd.mu
    sigma0, mu0 = batch.behavior_sigma, batch.behavior_mu
    kl = math.log(sigma / sigma0) + (sigma0**2 + (mu0 - mu) ** 2) / (2.0 * sigma**2) - 0.5
    return float(np.mean(kl))


# -- rollout collection ---------------------------------------------------------


def _episode_rng(seed: int, episode_counter: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, 1, episode_counter)))


def make_learners(
    pa_config: PAConfig, cfg: TrainerConfig, objective: ObjectiveSpec
) -> dict[str, Learner]:
    """Fresh nets and optimizers for every learning party."""
    init_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0)))
    obs_dim = env_mod.observation_size(pa_config.env)
    learners: dict[str, Learner] = {}
    if objective.learns_principal:
        net = PolicyValueNet(obs_dim, "gaussian", rng=init_rng)
        learners["principal"] = Learner(
            name="principal",
            role="principal",
            net=net,
            adam=Adam(net.params, cfg.lr_principal),
            entropy_cost=cfg.entropy_cost_principal,
            kl_beta=cfg.kl_beta0_principal,
            kl_beta0=cfg.kl_beta0_principal,
        )
    for i, name in enumerate(AGENT_NAMES):
        net = PolicyValueNet(obs_dim + 1, "categorical", n_actions=N_AGENT_ACTIONS, rng=init_rng)
        learners[name] = Learner(
            name=name,
            role="agent",
            net=net,
            adam=Adam(net.params, cfg.lr_agent),
            entropy_cost=cfg.entropy_cost_agent,
            kl_beta=cfg.kl_beta0_agent,
            kl_beta0=cfg.kl_beta0_agent,
            agent_index=i,
        )
    return learners


@dataclass
class RolloutResult:
    batches: dict[str, TrajectoryBatch]
    mean_wealths: np.ndarray  # (n_agents + 1,) mean episodic wealth, principal last
    episode_wealths: np.ndarray  # (N, n_agents + 1)
    mean_alpha: float
    reject_rates: tuple[float, float]
    mean_entropies: dict[str, float]
    episodes: int


def collect_rollouts(
    pa_config: PAConfig,
    cfg: TrainerConfig,
    objective: ObjectiveSpec,
    learners: dict[str, Learner],
    episode_counter: int,
) -> RolloutResult:
    """Play one batch of episodes in lockstep under frozen parameters.

    Each episode draws from its own generator stream (derived from the
    master seed and a global episode counter), so results are identical
    however episodes are scheduled.
    """
    n_eps = cfg.episodes_per_batch
    T = cfg.episode_length
    n_agents = env_mod.N_AGENTS
    principal = learners.get("principal")
    fixed_alpha = objective.fixed_alpha

    rngs = [_episode_rng(cfg.seed, episode_counter + e) for e in range(n_eps)]
    states = [env_mod.reset(pa_config.env, rngs[e]) for e in range(n_eps)]
    ledgers = [WealthLedger() for _ in range(n_eps)]

    obs_dim = env_mod.observation_size(pa_config.env)
    store: dict[str, dict[str, np.ndarray]] = {}
    for name, learner in learners.items():
        d = obs_dim if learner.role == "principal" else obs_dim + 1
        store[name] = {
            "obs": np.empty((T, n_eps, d)),
            "actions": np.empty((T, n_eps)),
            "log_probs": np.empty((T, n_eps)),
            "values": np.empty((T, n_eps)),
            "rewards": np.empty((T, n_eps)),
        }
    if principal is not None:
        store["principal"]["behavior_mu"] = np.empty((T, n_eps))
    for name in AGENT_NAMES:
        store[name]["behavior_logp_all"] = np.empty((T, n_eps, N_AGENT_ACTIONS))

    alpha_sum = 0.0
    entropy_sums = {name: 0.0 for name in learners}
    sigma0 = principal.net.sigma() if principal is not None else None

    for t in range(T):
        grid_obs = np.stack([env_mod.observe(pa_config.env, s) for s in states])

        if principal is not None:
            fwd = principal.net.forward(grid_obs)
            raws = np.array([rngs[e].normal(fwd.mu[e], fwd.sigma) for e in range(n_eps)])
            alphas = np.clip(raws, pa_config.contract_lo, pa_config.contract_hi)
            sp = store["principal"]
            sp["obs"][t] = grid_obs
            sp["actions"][t] = raws
            sp["log_probs"][t] = gaussian_log_prob(raws, fwd.mu, fwd.sigma)
            sp["values"][t] = fwd.value
            sp["behavior_mu"][t] = fwd.mu
            entropy_sums["principal"] += n_eps * (
                math.log(fwd.sigma) + 0.5 * math.log(2.0 * math.pi * math.e)
            )
        else:
            alphas = np.full(n_eps, fixed_alpha)
        alpha_sum += float(alphas.sum())

        agent_obs = np.concatenate([grid_obs, alphas[:, None]], axis=1)
        actions = np.empty((n_agents, n_eps), dtype=int)
        for i, name in enumerate(AGENT_NAMES):
            learner = learners[name]
            fwd = learner.net.forward(agent_obs)
            logp_all = log_softmax(fwd.policy_out)
            probs = np.exp(logp_all)
            sa = store[name]
            # Inverse-CDF draw per episode stream, same convention as
            # nets.sample_categorical but batched for the lockstep rollout.
            cum_rows = np.cumsum(probs, axis=1).tolist()
            for e in range(n_eps):
                u = rngs[e].random()
                row = cum_rows[e]
                a = 0
                while a < N_AGENT_ACTIONS - 1 and row[a] <= u:
                    a += 1
                actions[i, e] = a
            sa["obs"][t] = agent_obs
            sa["actions"][t] = actions[i]
            sa["log_probs"][t] = logp_all[np.arange(n_eps), actions[i]]
            sa["values"][t] = fwd.value
            sa["behavior_logp_all"][t] = logp_all
            entropy_sums[name] += float(-(probs * logp_all).sum())

        for e in range(n_eps):
            states[e], cstep = contract_step(
                pa_config, states[e], float(alphas[e]),
                (int(actions[0, e]), int(actions[1, e])), rngs[e], ledgers[e],
            )
            for i, name in enumerate(AGENT_NAMES):
                store[name]["rewards"][t, e] = cstep.agent_payments[i]
            if principal is not None:
                store["principal"]["rewards"][t, e] = principal_reward(
                    objective, cstep.principal_view(), ledgers[e]
                )

    def flat(arr: np.ndarray) -> np.ndarray:
        # (T, N, ...) -> episode-contiguous (N * T, ...)
        return np.ascontiguousarray(np.moveaxis(arr, 0, 1)).reshape((n_eps * T,) + arr.shape[2:])

    dones = np.zeros((T, n_eps), dtype=bool)
    dones[-1] = True
    batches: dict[str, TrajectoryBatch] = {}
    for name, learner in learners.items():
        s = store[name]
        batches[name] = TrajectoryBatch(
            obs=flat(s["obs"]),
            actions=flat(s["actions"]),
            log_probs=flat(s["log_probs"]),
            rewards=flat(s["rewards"]),
            values=flat(s["values"]),
            dones=flat(dones),
            behavior_logp_all=flat(s["behavior_logp_all"]) if learner.role == "agent" else None,
            behavior_mu=flat(s["behavior_mu"]) if learner.role == "principal" else None,
            behavior_sigma=sigma0 if learner.role == "principal" else None,
        )

    episode_wealths = np.stack([l.wealth_vector() for l in ledgers])
    reject_rates = tuple(
        float((store[name]["actions"] == REJECT).mean()) for name in AGENT_NAMES
    )
    total = n_eps * T
    return RolloutResult(
        batches=batches,
        mean_wealths=episode_wealths.mean(axis=0),
        episode_wealths=episode_wealths,
        mean_alpha=alpha_sum / total,
        reject_rates=(reject_rates[0], reject_rates[1]),
        mean_entropies={name: s / total for name, s in entropy_sums.items()},
        episodes=n_eps,
    )


# -- outer loop -----------------------------------------------------------------


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    return (adv - adv.mean()) / (adv.std() + 1e-8)


def ppo_update(
    learner: Learner,
    batch: TrajectoryBatch,
    cfg: TrainerConfig,
    update_rng: np.random.Generator,
) -> float:
    """Run the PPO epochs for one learner; returns post-update KL.

    The adaptive KL penalty only applies to learners configured with a
    nonzero initial beta; for the rest the measured KL is skipped too.
    """
    n = len(batch)
    for _ in range(cfg.epochs_per_update):
        perm = update_rng.permutation(n)
        for start in range(0, n, cfg.minibatch_size):
            idx = perm[start : start + cfg.minibatch_size]
            result = ppo_loss(
                learner.net, batch.take(idx), cfg, learner.entropy_cost, learner.kl_beta
            )
            learner.adam.step(learner.net.params, result.grads)
    if learner.kl_beta0 <= 0.0:
        return 0.0
    kl = measured_kl(learner.net, batch)
    if kl > 1.5 * cfg.kl_target:
        learner.kl_beta *= 1.5
    elif kl < cfg.kl_target / 1.5:
        learner.kl_beta /= 1.5
    return kl


@dataclass
class TrainResult:
    rows: list[dict]
    learners: dict[str, Learner]
    config: TrainerConfig

    @property
    def nets(self) -> dict[str, PolicyValueNet]:
        return {name: l.net for name, l in self.learners.items()}


def train(
    pa_config: PAConfig,
    cfg: TrainerConfig,
    objective: ObjectiveSpec,
    iterations: int,
    seed: int | None = None,
    checkpoint_dir=None,
    progress_cb=None,
) -> TrainResult:
    """Run the full training loop and log one metrics row per iteration.

    ``seed`` overrides ``cfg.seed`` for multi-seed sweeps. On any error the
    current parameters are dumped to ``checkpoint_dir`` (when given) before
    the exception propagates.
    """
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if cfg.episode_length != pa_config.env.episode_length:
        raise ValueError("trainer and environment disagree on the episode length")

    learners = make_learners(pa_config, cfg, objective)
    update_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 2)))
    rows: list[dict] = []
    episode_counter = 0

    try:
        for it in range(iterations):
            rollout = collect_rollouts(pa_config, cfg, objective, learners, episode_counter)
            episode_counter += rollout.episodes

            kl_principal = 0.0
            for name, learner in learners.items():
                batch = rollout.batches[name]
                adv, ret = compute_gae(
                    batch.rewards, batch.values, batch.dones, cfg.gamma, cfg.gae_lambda
                )
                batch.advantages = normalize_advantages(adv)
                batch.returns = ret
                kl = ppo_update(learner, batch, cfg, update_rng)
                if name == "principal":
                    kl_principal = kl

            include_p = objective.include_principal_in_metrics
            wealths = rollout.mean_wealths if include_p else rollout.mean_wealths[:-1]
            mrow = MetricsRow.from_wealths(it, cfg.seed, wealths)
            rows.append(
                {
                    "iteration": it,
                    "seed": cfg.seed,
                    "objective": objective.kind,
                    "lambda": objective.lam,
                    "mean_alpha": rollout.mean_alpha,
                    "reject_rate_red": rollout.reject_rates[0],
                    "reject_rate_blue": rollout.reject_rates[1],
                    "wealth_red": float(rollout.mean_wealths[0]),
                    "wealth_blue": float(rollout.mean_wealths[1]),
                    "wealth_principal": float(rollout.mean_wealths[2]),
                    "welfare": mrow.welfare,
                    "one_minus_gini": mrow.one_minus_gini,
                    "rawlsian": mrow.rawlsian,
                    "aie": mrow.aie,
                    "kl_principal": kl_principal,
                    "entropy_red": rollout.mean_entropies["red"],
                    "entropy_blue": rollout.mean_entropies["blue"],
                }
            )
            if progress_cb is not None:
                progress_cb(rows[-1])
    except Exception:
        if checkpoint_dir is not None:
            from pathlib import Path

            path = Path(checkpoint_dir)
            path.mkdir(parents=True, exist_ok=True)
            save_checkpoint({n: l.net for n, l in learners.items()}, path / "crash_checkpoint.npz")
        raise

    return TrainResult(rows=rows, learners=learners, config=cfg)
