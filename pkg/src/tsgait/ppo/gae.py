"""Generalized advantage estimation over episode-structured batches."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TIMEOUT = "timeout"
FAILURE = "failure"


@dataclass
class Episode:
    start: int
    end: int                  # exclusive
    termination: str          # timeout | failure
    bootstrap_value: float    # critic value of the post-terminal observation


@dataclass
class RolloutBatch:
    obs: np.ndarray           # (n, obs_dim)
    actions: np.ndarray       # (n, act_dim) clamped, as executed
    raw_actions: np.ndarray   # (n, act_dim) pre-clamp Gaussian samples
    log_probs: np.ndarray     # (n,)
    rewards: np.ndarray       # (n,)
    values: np.ndarray        # (n,)
    dones: np.ndarray         # (n,) bool, episode-final steps
    episodes: list = field(default_factory=list)

    def __len__(self):
        return len(self.rewards)

    def validate(self):
        n = len(self.rewards)
        for arr in (self.obs, self.actions, self.raw_actions, self.log_probs,
                    self.values, self.dones):
            if len(arr) != n:
                raise ValueError("batch arrays disagree on length")
        if not np.all(np.isfinite(self.log_probs)):
            raise ValueError("non-finite log-probabilities in batch")
        ends = {ep.end - 1 for ep in self.episodes}
        if set(np.flatnonzero(self.dones)) != ends:
            raise ValueError("done flags do not match episode boundaries")


def concat_batches(batches):
    episodes = []
    offset = 0
    for b in batches:
        for ep in b.episodes:
            episodes.append(Episode(ep.start + offset, ep.end + offset,
                                    ep.termination, ep.bootstrap_value))
        offset += len(b)
    return RolloutBatch(
        obs=np.concatenate([b.obs for b in batches]),
        actions=np.concatenate([b.actions for b in batches]),
        raw_actions=np.concatenate([b.raw_actions for b in batches]),
        log_probs=np.concatenate([b.log_probs for b in batches]),
        rewards=np.concatenate([b.rewards for b in batches]),
        values=np.concatenate([b.values for b in batches]),
        dones=np.concatenate([b.dones for b in batches]),
        episodes=episodes,
    )


def episode_gae(rewards, values, bootstrap_value, gamma, lam):
    """Backward GAE recursion for one episode."""
    n = len(rewards)
    adv = np.zeros(n)
    running = 0.0
    next_value = bootstrap_value
    for t in range(n - 1, -1, -1):
        delta = rewards[t] + gamma * next_value - values[t]
        running = delta + gamma * lam * running
        adv[t] = running
        next_value = values[t]
    return adv


def gae(batch, gamma, lam, normalize=True):
    """(advantages, value targets) for a full rollout batch.

    Timeout episodes bootstrap with the critic's value of the observation
    after the final step; failures bootstrap with zero.
    """
    adv = np.zeros(len(batch))
    for ep in batch.episodes:
        boot = ep.bootstrap_value if ep.termination == TIMEOUT else 0.0
        adv[ep.start:ep.end] = episode_gae(
            batch.rewards[ep.start:ep.end], batch.values[ep.start:ep.end],
            boot, gamma, lam)
    targets = adv + batch.values
    if normalize:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    return adv, targets
