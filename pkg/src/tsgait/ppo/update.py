"""Clipped-objective PPO update with exact manual gradients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nets
from .policy import log_prob


class UpdateDiverged(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class PpoConfig:
    adam_stepsize: float = 1e-4
    epochs: int = 8
    minibatch: int = 1024
    gamma: float = 0.99
    clip_epsilon: float = 0.2
    max_grad_norm: float = 0.05
    gae_lambda: float = 0.95
    samples_per_iteration: int = 5000
    hidden: int = 256
    log_sigma_task: float = -2.5
    log_sigma_joint: float = -1.5
    iterations: int = 300
    checkpoint_every: int = 10
    advantage_norm: bool = True
    workers: int = 1
    seeds: list = field(default_factory=lambda: [1, 2, 3, 4, 5])

    def validate(self):
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ValueError("clip_epsilon must lie in (0, 1)")
        for name in ("adam_stepsize", "epochs", "minibatch", "gamma",
                     "max_grad_norm", "gae_lambda", "samples_per_iteration",
                     "hidden", "iterations"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def log_sigma(self, action_space):
        return self.log_sigma_task if action_space == "task" else \
            self.log_sigma_joint


def actor_loss_and_grad(policy, obs, raw_actions, old_log_probs, advantages,
                        clip_epsilon):
    """Clipped surrogate loss, its exact parameter gradients, diagnostics."""
    n = len(obs)
    mean = nets.forward(policy.actor, obs)
    logp = log_prob(raw_actions, mean, policy.sigma)
    ratio = np.exp(logp - old_log_probs)
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon)
    obj_plain = ratio * advantages
    obj_clip = clipped * advantages
    loss = -float(np.mean(np.minimum(obj_plain, obj_clip)))

    # gradient flows through the plain ratio only where it attains the min
    active = obj_plain <= obj_clip
    coeff = np.where(active, ratio * advantages, 0.0) / n
    # d logp / d mean = (raw - mean) / sigma^2
    mean_grad = -coeff[:, None] * (raw_actions - mean) / policy.sigma ** 2
    grads, _ = nets.backward(policy.actor, obs, mean_grad)

    diag = {
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > clip_epsilon)),
        "approx_kl": float(np.mean(old_log_probs - logp)),
    }
    return loss, grads, diag


def critic_loss_and_grad(critic, obs, targets):
    n = len(obs)
    normalized = (targets - critic.mean) / critic.std
    raw = nets.forward(critic.net, obs)[:, 0]
    err = raw - normalized
    loss = float(np.mean(err * err))
    grads, _ = nets.backward(critic.net, obs, (2.0 * err / n)[:, None])
    return loss, grads


def ppo_update(policy, critic, batch, advantages, targets, config, rng,
               actor_opt=None, critic_opt=None):
    """Run the epoch/minibatch schedule in place; returns diagnostics."""
    n = len(batch)
    if actor_opt is None:
        actor_opt = nets.Adam(policy.actor.arrays(), config.adam_stepsize)
    if critic_opt is None:
        critic_opt = nets.Adam(critic.net.arrays(), config.adam_stepsize)

    actor_losses, critic_losses, clip_fracs, kls = [], [], [], []
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        for lo in range(0, n, config.minibatch):
            idx = perm[lo:lo + config.minibatch]  # last partial used as-is
            a_loss, a_grads, diag = actor_loss_and_grad(
                policy, batch.obs[idx], batch.raw_actions[idx],
                batch.log_probs[idx], advantages[idx], config.clip_epsilon)
            c_loss, c_grads = critic_loss_and_grad(critic, batch.obs[idx],
                                                   targets[idx])
            if not (np.isfinite(a_loss) and np.isfinite(c_loss)):
                raise UpdateDiverged(
                    "non-finite PPO loss",
                    {"actor_loss": a_loss, "critic_loss": c_loss, **diag})
            nets.clip_by_global_norm(a_grads, config.max_grad_norm)
            nets.clip_by_global_norm(c_grads, config.max_grad_norm)
            actor_opt.step(policy.actor.arrays(), a_grads)
            critic_opt.step(critic.net.arrays(), c_grads)
            actor_losses.append(a_loss)
            critic_losses.append(c_loss)
            clip_fracs.append(diag["clip_fraction"])
            kls.append(diag["approx_kl"])
    return {
        "actor_loss": float(np.mean(actor_losses)),
        "critic_loss": float(np.mean(critic_losses)),
        "clip_fraction": float(np.mean(clip_fracs)),
        "approx_kl": float(np.mean(kls)),
    }
