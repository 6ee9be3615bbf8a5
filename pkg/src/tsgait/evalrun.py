"""Policy evaluation: speed tracking and stance-phase GRF profiles.

Evaluation episodes run the deterministic policy mean (no sampling) beyond
the training horizon: a warm-up window is discarded, then achieved speed is
measured from base displacement over the measurement window, and per-window
ground-reaction forces are binned by the foot's position within its stance
window (only windows with transition weight > 0.5 count).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import env as envmod
from .reward import TERM_NAMES

SPEED_COLUMNS = ("speed_cmd", "achieved_mean", "achieved_std", "falls",
                 "steps")
GRF_COLUMNS = ("bin_center", "vertical_mean", "forward_mean", "samples")


@dataclass
class EvalReport:
    speed_rows: list = field(default_factory=list)   # rows per SPEED_COLUMNS
    grf_rows: list = field(default_factory=list)     # rows per GRF_COLUMNS
    falls: int = 0
    steps: int = 0


@dataclass
class StepRecord:
    """One policy step of an evaluation trajectory."""

    time: float
    base_x: float
    base_vx: float
    grf: np.ndarray          # (2,3) window-averaged, per foot
    phi: np.ndarray          # (2,)
    stance_phase: tuple      # per foot, None during swing
    fell: bool


TRACE_COLUMNS = (
    "time", "base_x", "base_y", "base_z",
    "base_vx", "base_vy", "base_vz",
    "lfoot_x", "lfoot_y", "lfoot_z", "rfoot_x", "rfoot_y", "rfoot_z",
    "grf_l_x", "grf_l_y", "grf_l_z", "grf_r_x", "grf_r_y", "grf_r_z",
    *(f"r_{name}" for name in TERM_NAMES),
    "reward", *(f"action_{i}" for i in range(10)),
)


def trace_row(info, obs, action, reward_total):
    """One episode-trace CSV row from a step's outputs."""
    breakdown = info["breakdown"]
    left, right = info["foot_rel"]
    return (
        info["time"], *info["base_position"], *info["base_velocity"],
        *left, *right, *info["grf_mean"][0], *info["grf_mean"][1],
        *(breakdown[k] for k in breakdown if k != "total"),
        reward_total, *action,
    )


def rollout_deterministic(env, policy, n_steps, seed=0, phase=None,
                          trace=None):
    """Run the policy mean for n_steps (re-resetting after falls)."""
    records = []
    obs = env.reset(seed=seed, phase=phase)
    for _ in range(n_steps):
        action = np.clip(policy.mean(obs), -1.0, 1.0)
        next_obs, rew, done, info = env.step_policy(action)
        records.append(StepRecord(
            time=info["time"], base_x=info["base_position"][0],
            base_vx=info["base_velocity"][0], grf=info["grf_mean"],
            phi=np.asarray(info["phi"]), stance_phase=info["stance_phase"],
            fell=done and info["termination"] == envmod.FAILURE))
        if trace is not None:
            trace.append(trace_row(info, next_obs, action, rew))
        obs = next_obs
        if done:
            obs = env.reset()
    return records


def achieved_speed(records, warmup_s, measure_s, policy_rate=40.0):
    """(mean, std, falls, steps) over the measurement window.

    The mean comes from base displacement between the first and last
    measurement step (robust to within-cycle speed ripple); the std is over
    instantaneous forward velocities.
    """
    first = int(round(warmup_s * policy_rate))
    last = min(int(round((warmup_s + measure_s) * policy_rate)), len(records))
    window = records[first:last]
    if len(window) < 2:
        return 0.0, 0.0, sum(r.fell for r in records), len(records)
    # accumulate displacement segment-wise so falls/resets do not corrupt it
    distance = 0.0
    duration = 0.0
    prev = window[0]
    for rec in window[1:]:
        if not prev.fell and rec.time > prev.time:
            distance += rec.base_x - prev.base_x
            duration += rec.time - prev.time
        prev = rec
    mean = distance / duration if duration > 0 else 0.0
    std = float(np.std([r.base_vx for r in window]))
    falls = sum(r.fell for r in records)
    return float(mean), std, falls, len(window)


def bin_grf(records, n_bins=20, phi_gate=0.5, skip=0):
    """Average per-foot GRFs into stance-phase bins (vertical and forward).

    Only windows whose transition weight exceeds ``phi_gate`` contribute;
    bins partition [0, 1] of the stance window and averages are normalized
    per bin count.
    """
    sums = np.zeros((n_bins, 2))
    counts = np.zeros(n_bins, dtype=int)
    for rec in records[skip:]:
        for foot in (0, 1):
            s = rec.stance_phase[foot]
            if s is None or rec.phi[foot] <= phi_gate:
                continue
            b = min(int(s * n_bins), n_bins - 1)
            sums[b, 0] += rec.grf[foot][2]
            sums[b, 1] += rec.grf[foot][0]
            counts[b] += 1
    rows = []
    for b in range(n_bins):
        center = (b + 0.5) / n_bins
        if counts[b] > 0:
            rows.append((center, sums[b, 0] / counts[b],
                         sums[b, 1] / counts[b], int(counts[b])))
        else:
            rows.append((center, 0.0, 0.0, 0))
    return rows


def evaluate(cfg, policy, action_space, speeds=None, backend=None,
             trace=None):
    """Speed sweep + GRF profile for a trained policy; returns EvalReport."""
    exp = cfg.experiment
    speeds = exp["eval_speeds"] if speeds is None else speeds
    warmup = exp["eval_warmup_s"]
    measure = exp["eval_measure_s"]
    report = EvalReport()
    all_records = []
    for k, speed in enumerate(speeds):
        env = cfg.env_factory(action_space=action_space, seed=1000 + k,
                              speed=speed, backend=backend)()
        env.episode.horizon = 10 ** 9   # evaluation ignores the train horizon
        n_steps = int(round((warmup + measure) * env.episode.policy_rate))
        records = rollout_deterministic(env, policy, n_steps, seed=1000 + k,
                                        phase=0.0, trace=trace)
        mean, std, falls, steps = achieved_speed(
            records, warmup, measure, env.episode.policy_rate)
        report.speed_rows.append((speed, mean, std, falls, steps))
        report.falls += falls
        report.steps += len(records)
        skip = int(round(warmup * env.episode.policy_rate))
        all_records.extend(records[skip:])
    report.grf_rows = bin_grf(all_records, n_bins=exp["grf_bins"])
    return report
