"""Tiny feed-forward policy/value approximators with hand-written gradients.

Every learner owns one net: a tanh trunk (input -> 64 -> 64) with a policy
head and a scalar value head on top. Agents use a categorical head over the
six actions (five moves + reject at index 5); the principal uses a Gaussian
head whose mean is a squashed state-dependent output and whose standard
deviation is a single learned, state-independent parameter.

Gradients are reverse-mode and exact: the loss side supplies d(loss)/d(head
outputs) and :meth:`PolicyValueNet.backward` maps them to parameter
gradients. Everything is float64 numpy, so analytic gradients can be checked
against central finite differences to tight tolerances.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SIGMA_FLOOR",
    "ActionSample",
    "Forward",
    "PolicyValueNet",
    "agent_sample",
    "principal_sample",
    "softmax",
    "save_checkpoint",
    "load_checkpoint",
]

SIGMA_FLOOR = 1e-3
HIDDEN = (64, 64)


def orthogonal(rng: np.random.Generator, shape: tuple[int, int], gain: float) -> np.ndarray:
    a = rng.standard_normal(shape)
    u, _, vt = np.linalg.svd(a, full_matrices=False)
    q = u if u.shape == shape else vt
    return gain * q


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def gaussian_log_prob(x: np.ndarray, mu: np.ndarray, sigma: float) -> np.ndarray:
    z = (x - mu) / sigma
    return -0.5 * z * z - math.log(sigma) - 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ActionSample:
    """One sampled decision plus the quantities PPO needs to learn from it.

    ``action`` is the emitted action (move index, or clipped contract value);
    ``raw`` keeps the pre-clip Gaussian draw, at which ``log_prob`` was
    evaluated so the density stays well-defined.
    """

    action: int | float
    log_prob: float
    entropy: float
    value: float
    raw: float | None = None


@dataclass
class Forward:
    """Cache of one batched forward pass, consumed by :meth:`backward`."""

    obs: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    policy_out: np.ndarray  # logits (B, A) for categorical, mu_raw (B,) for gaussian
    value: np.ndarray  # (B,)
    mu: np.ndarray | None = None  # sigmoid(mu_raw), gaussian only
    sigma: float | None = None


class PolicyValueNet:
    """Shared-trunk policy + value network, ``kind`` in {categorical, gaussian}."""

    def __init__(
        self,
        obs_dim: int,
        kind: str,
        n_actions: int = 0,
        rng: np.random.Generator | None = None,
        init_log_sigma: float = math.log(0.2),
    ):
        if kind not in ("categorical", "gaussian"):
            raise ValueError(f"unknown net kind {kind!r}")
        if kind == "categorical" and n_actions < 2:
            raise ValueError("categorical head needs at least two actions")
        rng = np.random.default_rng() if rng is None else rng
        self.obs_dim = obs_dim
        self.kind = kind
        self.n_actions = n_actions if kind == "categorical" else 1
        h1, h2 = HIDDEN
        # Small policy-head weights keep the initial policy near uniform
        # (categorical) or near mu = 0.5 (gaussian).
        self.params: dict[str, np.ndarray] = {
            "W1": orthogonal(rng, (obs_dim, h1), math.sqrt(2.0)),
            "b1": np.zeros(h1),
            "W2": orthogonal(rng, (h1, h2), math.sqrt(2.0)),
            "b2": np.zeros(h2),
            "Wp": orthogonal(rng, (h2, self.n_actions), 0.01),
            "bp": np.zeros(self.n_actions),
            "Wv": orthogonal(rng, (h2, 1), 1.0),
            "bv": np.zeros(1),
        }
        if kind == "gaussian":
            self.params["log_sigma"] = np.array(init_log_sigma, dtype=np.float64)

    # -- forward/backward ---------------------------------------------------

    def sigma(self) -> float:
        return max(float(np.exp(self.params["log_sigma"])), SIGMA_FLOOR)

    def forward(self, obs: np.ndarray) -> Forward:
        obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
        if obs.shape[1] != self.obs_dim:
            raise ValueError(f"observation length {obs.shape[1]} != input size {self.obs_dim}")
        p = self.params
        h1 = np.tanh(obs @ p["W1"] + p["b1"])
        h2 = np.tanh(h1 @ p["W2"] + p["b2"])
        pol = h2 @ p["Wp"] + p["bp"]
        val = (h2 @ p["Wv"] + p["bv"])[:, 0]
        fwd = Forward(obs=obs, h1=h1, h2=h2, policy_out=pol, value=val)
        if self.kind == "gaussian":
            fwd.policy_out = pol[:, 0]
            fwd.mu = 1.0 / (1.0 + np.exp(-fwd.policy_out))
            fwd.sigma = self.sigma()
        return fwd

    def backward(
        self,
        fwd: Forward,
        d_policy: np.ndarray,
        d_value: np.ndarray,
        d_sigma: float = 0.0,
    ) -> dict[str, np.ndarray]:
        """Map head gradients to parameter gradients.

        ``d_policy`` is d(loss)/d(logits) for categorical nets and
        d(loss)/d(mu_raw) for gaussian nets; ``d_sigma`` is d(loss)/d(sigma)
        and respects the sigma floor (zero gradient while floored).
        """
        p = self.params
        d_pol = np.asarray(d_policy, dtype=np.float64)
        if d_pol.ndim == 1:
            d_pol = d_pol[:, None]
        d_val = np.asarray(d_value, dtype=np.float64)[:, None]

        grads: dict[str, np.ndarray] = {}
        grads["Wp"] = fwd.h2.T @ d_pol
        grads["bp"] = d_pol.sum(axis=0)
        grads["Wv"] = fwd.h2.T @ d_val
        grads["bv"] = d_val.sum(axis=0)
        d_h2 = d_pol @ p["Wp"].T + d_val @ p["Wv"].T
        d_z2 = d_h2 * (1.0 - fwd.h2 * fwd.h2)
        grads["W2"] = fwd.h1.T @ d_z2
        grads["b2"] = d_z2.sum(axis=0)
        d_h1 = d_z2 @ p["W2"].T
        d_z1 = d_h1 * (1.0 - fwd.h1 * fwd.h1)
        grads["W1"] = fwd.obs.T @ d_z1
        grads["b1"] = d_z1.sum(axis=0)
        if self.kind == "gaussian":
            raw_sigma = float(np.exp(p["log_sigma"]))
            d_ls = d_sigma * raw_sigma if raw_sigma > SIGMA_FLOOR else 0.0
            grads["log_sigma"] = np.array(d_ls, dtype=np.float64)
        return grads

    # -- parameter plumbing ---------------------------------------------------

    def param_names(self) -> list[str]:
        return sorted(self.params)

    def get_flat(self) -> np.ndarray:
        return np.concatenate([np.ravel(self.params[k]) for k in self.param_names()])

    def set_flat(self, flat: np.ndarray) -> None:
        i = 0
        for k in self.param_names():
            n = self.params[k].size
            self.params[k] = np.asarray(flat[i : i + n], dtype=np.float64).reshape(
                self.params[k].shape
            )
            i += n
        if i != flat.size:
            raise ValueError("flat vector length does not match parameter count")

    def clone(self) -> "PolicyValueNet":
        other = object.__new__(PolicyValueNet)
        other.obs_dim = self.obs_dim
        other.kind = self.kind
        other.n_actions = self.n_actions
        other.params = {k: v.copy() for k, v in self.params.items()}
        return other


# -- sampling -----------------------------------------------------------------


def sample_categorical(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from one probability row."""
    u = rng.random()
    return int(min(np.searchsorted(np.cumsum(probs), u, side="right"), probs.size - 1))


def agent_sample(net: PolicyValueNet, obs: np.ndarray, rng: np.random.Generator) -> ActionSample:
    """Draw a move-or-reject action from the categorical policy."""
    fwd = net.forward(obs)
    log_p = log_softmax(fwd.policy_out)[0]
    probs = np.exp(log_p)
    action = sample_categorical(probs, rng)
    entropy = float(-(probs * log_p).sum())
    return ActionSample(
        action=action,
        log_prob=float(log_p[action]),
        entropy=entropy,
        value=float(fwd.value[0]),
    )


def principal_sample(net: PolicyValueNet, obs: np.ndarray, rng: np.random.Generator) -> ActionSample:
    """Draw a contract share from the Gaussian policy, clipped to [0, 1]."""
    fwd = net.forward(obs)
    mu = float(fwd.mu[0])
    sigma = float(fwd.sigma)
    raw = float(rng.normal(mu, sigma))
    entropy = math.log(sigma) + 0.5 * math.log(2.0 * math.pi * math.e)
    return ActionSample(
        action=float(np.clip(raw, 0.0, 1.0)),
        log_prob=float(gaussian_log_prob(np.array(raw), np.array(mu), sigma)),
        entropy=entropy,
        value=float(fwd.value[0]),
        raw=raw,
    )


# -- serialization --------------------------------------------------------------


def save_checkpoint(nets: dict[str, PolicyValueNet], path) -> None:
    """Write all learners' parameters to one ``.npz`` with a JSON header.

    Arrays are stored as raw float64, so a load reproduces every parameter
    bit-exactly.
    """
    meta = {
        name: {"obs_dim": net.obs_dim, "kind": net.kind, "n_actions": net.n_actions}
        for name, net in nets.items()
    }
    arrays = {
        f"{name}/{key}": val
        for name, net in nets.items()
        for key, val in net.params.items()
    }
    buf = io.BytesIO()
    np.savez(buf, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path) -> dict[str, PolicyValueNet]:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(data["__meta__"].item())
        nets: dict[str, PolicyValueNet] = {}
        for name, info in meta.items():
            net = object.__new__(PolicyValueNet)
            net.obs_dim = info["obs_dim"]
            net.kind = info["kind"]
            net.n_actions = info["n_actions"]
            net.params = {
                key.split("/", 1)[1]: np.array(data[key])
                for key in data.files
                if key.startswith(f"{name}/")
            }
            nets[name] = net
    return nets
