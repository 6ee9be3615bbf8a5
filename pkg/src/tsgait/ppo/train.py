"""Training loop: collect, estimate advantages, update, log, checkpoint."""

from __future__ import annotations

import os
import time

import numpy as np

from . import nets
from .gae import gae
from .policy import make_critic, make_policy, save_checkpoint
from .rollout import collect_rollouts
from .update import ppo_update

LOG_COLUMNS = ("iteration", "env_steps", "mean_ep_reward", "mean_ep_len",
               "actor_loss", "critic_loss", "clip_fraction", "wall_time_s")


def episode_stats(batch):
    returns, lengths = [], []
    for ep in batch.episodes:
        returns.append(float(np.sum(batch.rewards[ep.start:ep.end])))
        lengths.append(ep.end - ep.start)
    return float(np.mean(returns)), float(np.mean(lengths))


class TrainLogWriter:
    """Incremental CSV writer; rows survive aborted runs."""

    def __init__(self, path):
        self.path = path
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# schema_version=1\n")
            fh.write(",".join(LOG_COLUMNS) + "\n")

    def append(self, row):
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(",".join(_format(row[c]) for c in LOG_COLUMNS) + "\n")


def _format(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def train(env_factory, action_space, config, seed, out_dir=None,
          obs_dim=None, act_dim=None, config_hash="", on_iteration=None):
    """Run PPO for config.iterations; returns (policy, critic, history).

    ``env_factory`` must be a zero-argument picklable callable producing
    fresh environment instances.  With one worker the run is bitwise
    reproducible from (config, seed).
    """
    config.validate()
    probe = env_factory()
    obs = probe.reset(seed=0)
    obs_dim = obs_dim or len(obs)
    act_dim = act_dim or 10

    rng = np.random.default_rng(np.random.SeedSequence(
        entropy=seed, spawn_key=(0xA11CE,)))
    policy = make_policy(obs_dim, act_dim, config.hidden,
                         config.log_sigma(action_space), rng)
    critic = make_critic(obs_dim, config.hidden, rng)
    actor_opt = nets.Adam(policy.actor.arrays(), config.adam_stepsize)
    critic_opt = nets.Adam(critic.net.arrays(), config.adam_stepsize)

    writer = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        writer = TrainLogWriter(os.path.join(out_dir, "training_log.csv"))
        save_checkpoint(os.path.join(out_dir, "checkpoint_init.ckpt"),
                        policy, critic, 0, action_space, config_hash)

    history = []
    env_steps = 0
    start = time.time()
    for iteration in range(1, config.iterations + 1):
        batch = collect_rollouts(policy, critic, env_factory,
                                 config.samples_per_iteration,
                                 workers=config.workers, seed=seed,
                                 iteration=iteration)
        batch.validate()
        env_steps += len(batch)
        advantages, targets = gae(batch, config.gamma, config.gae_lambda,
                                  normalize=config.advantage_norm)
        critic.update_scale(targets)
        update_rng = np.random.default_rng(np.random.SeedSequence(
            entropy=seed, spawn_key=(0xBEEF, iteration)))
        diag = ppo_update(policy, critic, batch, advantages, targets, config,
                          update_rng, actor_opt, critic_opt)
        mean_ret, mean_len = episode_stats(batch)
        row = {
            "iteration": iteration,
            "env_steps": env_steps,
            "mean_ep_reward": mean_ret,
            "mean_ep_len": mean_len,
            "actor_loss": diag["actor_loss"],
            "critic_loss": diag["critic_loss"],
            "clip_fraction": diag["clip_fraction"],
            "wall_time_s": time.time() - start,
        }
        history.append(row)
        if writer is not None:
            writer.append(row)
        if out_dir is not None and (iteration % config.checkpoint_every == 0
                                    or iteration == config.iterations):
            save_checkpoint(
                os.path.join(out_dir, f"checkpoint_{iteration:05d}.ckpt"),
                policy, critic, iteration, action_space, config_hash)
        if on_iteration is not None:
            on_iteration(row)
    return policy, critic, history
