"""Gaussian policy with a fixed, non-learned standard deviation.

Actions are sampled around the tanh-bounded actor mean with per-dimension
noise sigma = exp(log_sigma) and clamped to [-1, 1]; log-probabilities are
always evaluated for the pre-clamp Gaussian sample, which is what the
probability ratios in the PPO update need.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from . import nets

LOG_2PI = math.log(2.0 * math.pi)

CKPT_MAGIC = "TSGAIT-CKPT v1"
_ARRAY_ORDER = ("actor_w1", "actor_b1", "actor_w2", "actor_b2",
                "critic_w1", "critic_b1", "critic_w2", "critic_b2")


@dataclass
class GaussianPolicy:
    actor: nets.MlpParams
    log_sigma: float

    @property
    def sigma(self):
        return math.exp(self.log_sigma)

    def mean(self, obs):
        return nets.forward(self.actor, obs)


@dataclass
class Critic:
    """Value function with a running target scale.

    The network regresses normalized returns; real-scale values come from
    the affine read-out.  Without this, the tight gradient-norm clip makes
    fitting the raw return magnitude take hundreds of iterations.
    """

    net: nets.MlpParams
    mean: float = 0.0
    std: float = 1.0

    def values(self, obs):
        raw = nets.forward(self.net, obs)
        return raw[..., 0] * self.std + self.mean

    def value(self, obs):
        return float(self.values(obs))

    def update_scale(self, targets, momentum=0.9):
        batch_mean = float(np.mean(targets))
        batch_std = max(float(np.std(targets)), 1e-6)
        if self.std == 1.0 and self.mean == 0.0:
            self.mean, self.std = batch_mean, batch_std
        else:
            self.mean = momentum * self.mean + (1 - momentum) * batch_mean
            self.std = momentum * self.std + (1 - momentum) * batch_std

    def arrays(self):
        return self.net.arrays()


def make_policy(obs_dim, act_dim, hidden, log_sigma, rng, final_scale=0.01):
    actor = nets.init_mlp(obs_dim, hidden, act_dim, nets.TANH, rng,
                          final_scale=final_scale)
    return GaussianPolicy(actor=actor, log_sigma=log_sigma)


def make_critic(obs_dim, hidden, rng):
    return Critic(net=nets.init_mlp(obs_dim, hidden, 1, nets.LINEAR, rng,
                                    final_scale=1.0))


def log_prob(raw_action, mean, sigma):
    """Diagonal Gaussian log-density of the pre-clamp sample."""
    z = (raw_action - mean) / sigma
    return -0.5 * np.sum(z * z, axis=-1) \
        - raw_action.shape[-1] * (math.log(sigma) + 0.5 * LOG_2PI)


def sample_action(policy, obs, rng):
    """(clamped action, log-prob, raw sample); deterministic given rng state."""
    mean = policy.mean(obs)
    raw = mean + policy.sigma * rng.standard_normal(mean.shape)
    action = np.clip(raw, -1.0, 1.0)
    return action, float(log_prob(raw, mean, policy.sigma)), raw


# ---------------------------------------------------------------------------
# Checkpoints: text header + little-endian float64 arrays in declared order
# ---------------------------------------------------------------------------

def save_checkpoint(path, policy, critic, iteration, action_space,
                    config_hash=""):
    arrays = dict(zip(_ARRAY_ORDER, policy.actor.arrays() + critic.arrays()))
    hidden, obs_dim = policy.actor.w1.shape
    act_dim = policy.actor.w2.shape[0]
    header = [
        CKPT_MAGIC,
        f"obs_dim {obs_dim}",
        f"act_dim {act_dim}",
        f"hidden {hidden}",
        f"log_sigma {policy.log_sigma!r}",
        f"action_space {action_space}",
        f"iteration {iteration}",
        f"config_hash {config_hash}",
        f"critic_mean {critic.mean!r}",
        f"critic_std {critic.std!r}",
        "arrays " + " ".join(_ARRAY_ORDER),
        "end",
    ]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("utf-8"))
        for name in _ARRAY_ORDER:
            fh.write(np.ascontiguousarray(arrays[name], dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns (policy, critic, metadata dict)."""
    with open(path, "rb") as fh:
        header = {}
        first = fh.readline().decode("utf-8").strip()
        if first != CKPT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file (got '{first}')")
        while True:
            line = fh.readline().decode("utf-8").strip()
            if line == "end":
                break
            key, _, value = line.partition(" ")
            header[key] = value
        obs_dim = int(header["obs_dim"])
        act_dim = int(header["act_dim"])
        hidden = int(header["hidden"])
        shapes = {
            "actor_w1": (hidden, obs_dim), "actor_b1": (hidden,),
            "actor_w2": (act_dim, hidden), "actor_b2": (act_dim,),
            "critic_w1": (hidden, obs_dim), "critic_b1": (hidden,),
            "critic_w2": (1, hidden), "critic_b2": (1,),
        }
        arrays = {}
        for name in header["arrays"].split():
            shape = shapes[name]
            count = int(np.prod(shape))
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError(f"{path}: truncated array {name}")
            arrays[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    policy = GaussianPolicy(
        actor=nets.MlpParams(arrays["actor_w1"], arrays["actor_b1"],
                             arrays["actor_w2"], arrays["actor_b2"],
                             output=nets.TANH),
        log_sigma=float(header["log_sigma"]))
    critic = Critic(
        net=nets.MlpParams(arrays["critic_w1"], arrays["critic_b1"],
                           arrays["critic_w2"], arrays["critic_b2"],
                           output=nets.LINEAR),
        mean=float(header.get("critic_mean", 0.0)),
        std=float(header.get("critic_std", 1.0)))
    meta = {"iteration": int(header["iteration"]),
            "action_space": header["action_space"],
            "config_hash": header.get("config_hash", "")}
    return policy, critic, meta


def hash_text(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
