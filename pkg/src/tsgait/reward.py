"""Locomotion reward: per-tick costs, exponential kernel, weighted total.

Eleven cost terms are averaged over each control window (the T ticks between
policy updates), squashed through ``exp(-f)`` into (0, 1], and combined with
fixed weights that sum to one.  The per-foot term blends a stance cost
(foot height and slip) with a swing cost (clearance tracking) using the
reference transition weight, linearly at the cost level.

The printed form of the kernel in the source material is ``exp(+mean f)``;
since every cost below is nonnegative and the result must lie in (0, 1], the
negated exponent is the only consistent reading and is what this module
implements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TERM_NAMES = (
    "lfoot", "rfoot", "base_xvel", "base_zvel", "base_zpos",
    "base_orientation", "base_straight", "foot_orientation",
    "base_linear_accel", "base_angular_vel", "action_smooth",
)

DEFAULT_WEIGHTS = np.array(
    [0.1, 0.1, 0.15, 0.1, 0.1, 0.1, 0.15, 0.05, 0.025, 0.025, 0.1])

N_TERMS = len(TERM_NAMES)
N_STATE_TERMS = N_TERMS - 1   # action_smooth is appended at the policy rate


@dataclass
class RewardWeights:
    values: np.ndarray = None

    def __post_init__(self):
        if self.values is None:
            self.values = DEFAULT_WEIGHTS.copy()
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (N_TERMS,):
            raise ValueError(f"expected {N_TERMS} weights, got "
                             f"{self.values.shape}")


@dataclass
class RewardBreakdown:
    """Kernelized value of every term plus the weighted total."""

    terms: np.ndarray
    total: float

    def as_dict(self):
        out = dict(zip(TERM_NAMES, self.terms))
        out["total"] = self.total
        return out


def foot_cost(foot_z, foot_speed, phi, swing_apex):
    """Stance/swing blend for one foot: height+slip vs clearance tracking."""
    stance = foot_z * foot_z + foot_speed
    swing = 40.0 * (swing_apex - foot_z) ** 2
    return phi * stance + (1.0 - phi) * swing


def tick_costs(foot_z, foot_speed, foot_quat_w, phi, base_y, base_z,
               base_vel, base_accel, omega, quat_w,
               xvel_ref, zvel_ref, zpos_ref, swing_apex):
    """The ten state-dependent costs for one control tick.

    ``foot_z`` are sole heights above the ground, ``foot_quat_w`` and
    ``quat_w`` are canonical quaternion inner products with the neutral
    orientation, ``base_accel`` is the per-tick finite difference of the base
    velocity.
    """
    out = np.empty(N_STATE_TERMS)
    out[0] = foot_cost(foot_z[0], foot_speed[0], phi[0], swing_apex)
    out[1] = foot_cost(foot_z[1], foot_speed[1], phi[1], swing_apex)
    out[2] = 3.0 * abs(base_vel[0] - xvel_ref)
    out[3] = 3.0 * abs(base_vel[2] - zvel_ref)
    out[4] = 3.0 * abs(base_z - zpos_ref)
    out[5] = 50.0 * (1.0 - quat_w)
    out[6] = 5.0 * abs(base_y) + 3.0 * abs(base_vel[1])
    out[7] = 30.0 * (1.0 - 0.5 * (foot_quat_w[0] + foot_quat_w[1]))
    out[8] = np.linalg.norm(base_accel)
    out[9] = np.linalg.norm(omega)
    return out


def action_smooth_cost(action, prev_action):
    """Consecutive policy-step action difference (constant over a window)."""
    return 3.0 * float(np.linalg.norm(np.asarray(action) - np.asarray(prev_action)))


@dataclass
class WindowLog:
    """Per-tick physical quantities for one policy window (arrays over T)."""

    foot_z: np.ndarray        # (T,2)
    foot_speed: np.ndarray    # (T,2) world speed of the sole frames
    foot_quat_w: np.ndarray   # (T,2)
    phi: np.ndarray           # (T,2)
    base_y: np.ndarray        # (T,)
    base_z: np.ndarray        # (T,)
    base_vel: np.ndarray      # (T,3)
    base_accel: np.ndarray    # (T,3)
    omega: np.ndarray         # (T,3)
    quat_w: np.ndarray        # (T,)
    xvel_ref: float
    zvel_ref: float
    zpos_ref: float
    swing_apex: float


def eval_terms(window, action, prev_action):
    """Averaged cost per term over a window (the f-bar vector, length 11)."""
    n = len(window.base_z)
    sums = np.zeros(N_STATE_TERMS)
    for t in range(n):
        sums += tick_costs(
            window.foot_z[t], window.foot_speed[t], window.foot_quat_w[t],
            window.phi[t], window.base_y[t], window.base_z[t],
            window.base_vel[t], window.base_accel[t], window.omega[t],
            window.quat_w[t], window.xvel_ref, window.zvel_ref,
            window.zpos_ref, window.swing_apex)
    fbar = sums / n
    return np.append(fbar, action_smooth_cost(action, prev_action))


def kernel(fbar):
    """Map nonnegative averaged costs to rewards in (0, 1]."""
    fbar = np.asarray(fbar, dtype=float)
    if np.any(fbar < 0.0):
        raise ValueError("cost terms must be nonnegative")
    return np.exp(-fbar)


def total(terms, weights=None):
    """Weighted sum of kernelized terms."""
    values = weights.values if isinstance(weights, RewardWeights) else (
        DEFAULT_WEIGHTS if weights is None else np.asarray(weights, dtype=float))
    return float(np.asarray(terms) @ values)


def breakdown_from_costs(fbar, weights=None):
    terms = kernel(fbar)
    return RewardBreakdown(terms=terms, total=total(terms, weights))
