"""From-scratch actor-critic PPO: networks, GAE, clipped update, training."""

from . import nets
from .gae import Episode, RolloutBatch, concat_batches, episode_gae, gae
from .policy import (GaussianPolicy, load_checkpoint, log_prob, make_critic,
                     make_policy, sample_action, save_checkpoint)
from .rollout import collect_rollouts, collect_worker, default_workers
from .train import LOG_COLUMNS, episode_stats, train
from .update import PpoConfig, UpdateDiverged, actor_loss_and_grad, \
    critic_loss_and_grad, ppo_update

__all__ = [
    "nets", "Episode", "RolloutBatch", "concat_batches", "episode_gae",
    "gae", "GaussianPolicy", "load_checkpoint", "log_prob", "make_critic",
    "make_policy", "sample_action", "save_checkpoint", "collect_rollouts",
    "collect_worker", "default_workers", "LOG_COLUMNS", "episode_stats",
    "train", "PpoConfig", "UpdateDiverged", "actor_loss_and_grad",
    "critic_loss_and_grad", "ppo_update",
]
