"""Rollout collection: full episodes until a timestep quota, optionally
across worker processes with independent seeded streams."""

from __future__ import annotations

import multiprocessing as mp
import os

import numpy as np

from . import nets
from .gae import Episode, RolloutBatch, concat_batches
from .policy import Critic, GaussianPolicy, sample_action

TIMEOUT = "timeout"
FAILURE = "failure"


def default_workers():
    return max(1, int(os.environ.get("TSGAIT_WORKERS", "1")))


def collect_worker(policy, critic, env, n_steps, rng):
    """Collect complete episodes on one env until >= n_steps timesteps."""
    obs_rows, act_rows, raw_rows, logp_rows = [], [], [], []
    reward_rows, value_rows, done_rows = [], [], []
    episodes = []
    total = 0
    while total < n_steps:
        start = total
        obs = env.reset(seed=int(rng.integers(2 ** 62)))
        done = False
        termination = FAILURE
        while not done:
            action, logp, raw = sample_action(policy, obs, rng)
            value = critic.value(obs)
            next_obs, reward, done, info = env.step_policy(action)
            obs_rows.append(obs)
            act_rows.append(action)
            raw_rows.append(raw)
            logp_rows.append(logp)
            reward_rows.append(reward)
            value_rows.append(value)
            done_rows.append(done)
            total += 1
            obs = next_obs
            if done:
                termination = info["termination"]
        bootstrap = critic.value(obs) if termination == TIMEOUT \
            else 0.0
        episodes.append(Episode(start, total, termination, bootstrap))
    return RolloutBatch(
        obs=np.asarray(obs_rows), actions=np.asarray(act_rows),
        raw_actions=np.asarray(raw_rows), log_probs=np.asarray(logp_rows),
        rewards=np.asarray(reward_rows), values=np.asarray(value_rows),
        dones=np.asarray(done_rows, dtype=bool), episodes=episodes)


def _run_worker(args):
    (actor_arrays, log_sigma, critic_arrays, critic_scale, env_factory,
     n_steps, seed_state) = args
    policy = GaussianPolicy(
        actor=nets.MlpParams(*[a.copy() for a in actor_arrays],
                             output=nets.TANH),
        log_sigma=log_sigma)
    critic = Critic(
        net=nets.MlpParams(*[a.copy() for a in critic_arrays],
                           output=nets.LINEAR),
        mean=critic_scale[0], std=critic_scale[1])
    env = env_factory()
    rng = np.random.default_rng(np.random.SeedSequence(
        entropy=seed_state[0], spawn_key=tuple(seed_state[1])))
    return collect_worker(policy, critic, env, n_steps, rng)


def collect_rollouts(policy, critic, env_factory, n_timesteps, workers=1,
                     seed=0, iteration=0):
    """Gather at least n_timesteps of complete episodes.

    Each worker owns an independent environment and RNG stream derived from
    (seed, iteration, worker index); batches merge in worker order, so the
    result is deterministic for a fixed worker count.
    """
    if workers <= 1:
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(iteration, 0)))
        env = env_factory()
        return collect_worker(policy, critic, env, n_timesteps, rng)
    share = (n_timesteps + workers - 1) // workers
    jobs = [
        (policy.actor.arrays(), policy.log_sigma, critic.arrays(),
         (critic.mean, critic.std), env_factory, share,
         (seed, (iteration, w)))
        for w in range(workers)
    ]
    with mp.get_context("fork").Pool(workers) as pool:
        batches = pool.map(_run_worker, jobs)
    return concat_batches(batches)
