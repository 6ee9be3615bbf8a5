"""Exploration-noise study: where do the feet go under random actions?

Zero-mean Gaussian actions are applied in either action space, in two modes:
a single policy step from a fixed set of initialization states, or whole
episodes of fresh noise until termination or the horizon.  Recorded
foot-relative-to-base positions are summarized by 2-D convex-hull areas and
a 1 cm occupancy-grid count so the task-space vs joint-space coverage
comparison is quantitative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import env as envmod

SINGLE_STEP = "single_step"
EPISODE = "episode"


@dataclass
class NoiseStudyConfig:
    mode: str = EPISODE
    action_space: str = envmod.TASK
    log_sigma: float = None
    n_samples: int = 50000
    n_init_states: int = 8
    speed: float = 0.5
    seed: int = 0
    horizon: int = 150

    def __post_init__(self):
        if self.log_sigma is None:
            self.log_sigma = -2.5 if self.action_space == envmod.TASK \
                else -1.5

    def validate(self):
        if self.mode not in (SINGLE_STEP, EPISODE):
            raise ValueError(f"unknown study mode '{self.mode}'")
        if self.action_space not in (envmod.TASK, envmod.JOINT):
            raise ValueError(f"unknown action space '{self.action_space}'")
        if self.n_samples <= 0:
            raise ValueError("n_samples must be positive")
        if not math.isfinite(self.log_sigma):
            raise ValueError("log_sigma must be finite")


@dataclass
class CoverageReport:
    mode: str
    action_space: str
    log_sigma: float
    n_samples: int
    hull_area_xz: float
    hull_area_xy: float
    occupancy_cells: int
    episodes: int
    falls: int
    mean_episode_steps: float

    def lines(self):
        return [
            f"mode {self.mode}",
            f"action_space {self.action_space}",
            f"log_sigma {self.log_sigma!r}",
            f"n_samples {self.n_samples}",
            f"hull_area_xz {self.hull_area_xz!r}",
            f"hull_area_xy {self.hull_area_xy!r}",
            f"occupancy_cells {self.occupancy_cells}",
            f"episodes {self.episodes}",
            f"falls {self.falls}",
            f"mean_episode_steps {self.mean_episode_steps!r}",
        ]


# ---------------------------------------------------------------------------
# Coverage metrics
# ---------------------------------------------------------------------------

def convex_hull_2d(points):
    """Monotone-chain convex hull of (n, 2) points, counterclockwise."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) < 3:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def turn(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def half(iterable):
        out = []
        for p in iterable:
            while len(out) >= 2 and turn(out[-2], out[-1], p) <= 0.0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def hull_area(points):
    """Area of the convex hull; zero for degenerate (collinear) sets."""
    hull = convex_hull_2d(points)
    if len(hull) < 3:
        return 0.0
    x, y = hull[:, 0], hull[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, 1))
                           - np.dot(y, np.roll(x, 1))))


def occupancy_count(points, cell=0.01):
    """Number of distinct cells of the given size touched by the samples."""
    cells = np.floor(np.asarray(points, dtype=float) / cell).astype(np.int64)
    return len(np.unique(cells, axis=0))


def coverage_metrics(samples, cell=0.01):
    """(hull_area_xz, hull_area_xy, occupancy) for (n, 3) foot positions."""
    samples = np.asarray(samples, dtype=float)
    return (hull_area(samples[:, [0, 2]]),
            hull_area(samples[:, [0, 1]]),
            occupancy_count(samples, cell=cell))


# ---------------------------------------------------------------------------
# The study
# ---------------------------------------------------------------------------

def _study_env(config, backend=None):
    return envmod.make_env(
        action_mode=config.action_space, seed=config.seed,
        speed=config.speed, backend=backend,
        horizon=config.horizon, init_phase_random=False,
        init_velocity_perturbation=0.0)


def run_noise_study(config, backend=None, sample_rows=None):
    """Run one scenario; returns (CoverageReport, samples (n, 2, 3)).

    ``sample_rows``, when given, receives one CSV row per recorded step per
    foot: (mode, action_space, seed, episode, step, foot, x, y, z,
    terminated).
    """
    config.validate()
    env = _study_env(config, backend=backend)
    rng = np.random.default_rng(np.random.SeedSequence(
        entropy=config.seed, spawn_key=(0x0F00,)))
    sigma = math.exp(config.log_sigma)
    act_dim = envmod.ACT_DIM

    samples = np.empty((config.n_samples, 2, 3))
    recorded = 0
    episodes = 0
    falls = 0
    step_counts = []

    while recorded < config.n_samples:
        phase = (episodes % config.n_init_states) / config.n_init_states
        env.reset(phase=phase)
        episodes += 1
        steps = 0
        done = False
        while not done and recorded < config.n_samples:
            action = np.clip(sigma * rng.standard_normal(act_dim), -1.0, 1.0)
            obs, reward, done, info = env.step_policy(action)
            left, right = info["foot_rel"]
            samples[recorded, 0] = left
            samples[recorded, 1] = right
            if sample_rows is not None:
                flag = int(done and info["termination"] == envmod.FAILURE)
                sample_rows.append((config.mode, config.action_space,
                                    config.seed, episodes - 1, steps, "left",
                                    left[0], left[1], left[2], flag))
                sample_rows.append((config.mode, config.action_space,
                                    config.seed, episodes - 1, steps, "right",
                                    right[0], right[1], right[2], flag))
            recorded += 1
            steps += 1
            if config.mode == SINGLE_STEP:
                break
        if done and info["termination"] == envmod.FAILURE:
            falls += 1
        step_counts.append(steps)

    pooled = samples.reshape(-1, 3)
    area_xz, area_xy, cells = coverage_metrics(pooled)
    report = CoverageReport(
        mode=config.mode, action_space=config.action_space,
        log_sigma=config.log_sigma, n_samples=config.n_samples,
        hull_area_xz=area_xz, hull_area_xy=area_xy, occupancy_cells=cells,
        episodes=episodes, falls=falls,
        mean_episode_steps=float(np.mean(step_counts)))
    return report, samples


SAMPLE_COLUMNS = ("mode", "action_space", "seed", "episode_id", "step", "foot",
                  "x", "y", "z", "terminated")
