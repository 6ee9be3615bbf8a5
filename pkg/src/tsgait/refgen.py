"""Analytic gait reference generator.

Produces the per-phase reference signals consumed by the controller and the
reward: foot setpoints relative to the base, feedforward ground forces, the
per-foot stance/swing transition weight, and base references.  One gait cycle
is parameterized by a phase in [0, 1); the left leg leads, the right leg runs
the same curves half a cycle later, mirrored in y.

Timeline for the left foot (ds = double_support_fraction):

    [0, ds]          touchdown ramp, weight 0 -> 1, foot on the ground
    [ds, 0.5]        single support, weight 1
    [0.5, 0.5+ds]    toe-off ramp, weight 1 -> 0
    [0.5+ds, 1)      swing, weight 0

During the whole stance window the foot translates backward relative to the
base at the commanded speed; during swing it returns along a quintic curve
with a configurable apex.  The vertical force profile is a raised cosine over
the stance window, normalized so one cycle's impulse carries the body weight;
the horizontal profile is a braking/propulsion sine, antisymmetric about
mid-stance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import model as mod

GRAVITY = 9.81


class WorkspaceError(ValueError):
    """Raised when inverse kinematics cannot reach a reference foot target."""


@dataclass
class GaitParams:
    cycle_period: float = 0.8
    double_support_fraction: float = 0.1
    swing_apex: float = 0.15
    speed_range: tuple = (0.0, 1.0)
    base_height_ref: float = 0.95
    total_mass: float = 33.0
    lateral_offset: float = 0.05
    horizontal_force_scale: float = 1.0
    theta_ref: np.ndarray = field(
        default_factory=lambda: np.array([0.0, -0.65, 0.0, -0.65]))
    # theta_ref order: [left hip-yaw, left foot-pitch, right hip-yaw,
    # right foot-pitch].  The default foot pitch levels the sole at the
    # default model's mid-stance crouch; flat_foot_theta_ref recalibrates
    # it for other geometries.
    com_forward: float = 0.0
    # forward offset of the whole-body COM from the base origin at the
    # nominal crouch; the stance feet center under the COM, not the base
    # (static_com_forward calibrates it)

    def validate(self):
        if not (0.0 <= self.double_support_fraction < 0.3):
            raise ValueError("double_support_fraction must lie in [0, 0.3)")
        if 2.0 * self.double_support_fraction >= 1.0:
            raise ValueError("double support leaves no swing phase")
        if not self.swing_apex > 0.0:
            raise ValueError("swing_apex must be > 0")
        if not self.cycle_period > 0.0:
            raise ValueError("cycle_period must be > 0")


@dataclass
class ReferenceSample:
    x_ref_left: np.ndarray
    x_ref_right: np.ndarray
    f_ref_left: np.ndarray
    f_ref_right: np.ndarray
    phi_left: float
    phi_right: float
    base_xvel_ref: float
    base_zvel_ref: float
    base_zpos_ref: float
    theta_ref: np.ndarray

    def x_ref(self, foot):
        return self.x_ref_left if foot == mod.LEFT else self.x_ref_right

    def f_ref(self, foot):
        return self.f_ref_left if foot == mod.LEFT else self.f_ref_right

    def phi(self, foot):
        return self.phi_left if foot == mod.LEFT else self.phi_right


def wrap_phase(phase):
    return phase % 1.0


def advance_phase(phase, dt, params):
    """Cycle phase advances at 1/cycle_period per second and wraps mod 1."""
    return wrap_phase(phase + dt / params.cycle_period)


def phase_encoding(phase):
    """(sin 2*pi*phase, cos 2*pi*phase): a unique, wrap-around phase identifier."""
    a = 2.0 * math.pi * wrap_phase(phase)
    return math.sin(a), math.cos(a)


def _quintic(s):
    """Smoothstep with zero velocity and acceleration at both ends."""
    s = min(max(s, 0.0), 1.0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def _stance_window(params):
    return 0.5 + params.double_support_fraction


_BOUNCE_GRID = 4096


def _base_bounce(params):
    """Base height/velocity curves consistent with the force profile.

    Integrating (F_total - m g) / m over the cycle with periodic boundary
    conditions yields the vertical bounce a point-mass body would follow
    under the reference forces; tracking it makes the feedforward and the
    base references dynamically consistent.  The curves are speed-independent
    (the vertical profile is) and cached on the params instance.
    """
    cache = getattr(params, "_bounce_cache", None)
    if cache is not None:
        return cache
    n = _BOUNCE_GRID
    half = n // 2
    window = _stance_window(params)
    amp = GRAVITY / window   # per-foot peak acceleration contribution
    # one half cycle; the total force profile repeats every half cycle
    accel = np.zeros(half + 1)
    for k in range(half + 1):
        phase = k / n
        total = 0.0
        for shift in (0.0, 0.5):
            local = (phase + shift) % 1.0
            if local < window:
                total += amp * math.sin(math.pi * local / window) ** 2
        accel[k] = total - GRAVITY
    dt = params.cycle_period / n

    def _cumtrapz(y):
        return np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * dt)])

    zdot = _cumtrapz(accel)
    zdot -= np.linspace(0.0, zdot[-1], half + 1)   # exact periodicity
    zdot -= zdot[:-1].mean()                       # zero mean: z periodic
    zpos = _cumtrapz(zdot)
    zpos -= np.linspace(0.0, zpos[-1], half + 1)
    zpos += params.base_height_ref - zpos[:-1].mean()
    # tile the half cycle: exact half-period symmetry by construction
    phases = np.arange(n + 1) / n
    cache = (phases,
             np.concatenate([zpos[:-1], zpos]),
             np.concatenate([zdot[:-1], zdot]),
             np.concatenate([accel[:-1], accel]))
    params._bounce_cache = cache
    return cache


def base_height_ref(params, phase):
    """(z_ref, zdot_ref) of the base at a cycle phase."""
    phases, zpos, zdot, _ = _base_bounce(params)
    x = wrap_phase(phase) * _BOUNCE_GRID
    i = int(x)
    frac = x - i
    return (zpos[i] * (1 - frac) + zpos[i + 1] * frac,
            zdot[i] * (1 - frac) + zdot[i + 1] * frac)


def base_accel_ref(params, phase):
    """Vertical acceleration the reference forces imply at a cycle phase."""
    phases, _, _, accel = _base_bounce(params)
    x = wrap_phase(phase) * _BOUNCE_GRID
    i = int(x)
    frac = x - i
    return accel[i] * (1 - frac) + accel[i + 1] * frac


def transition_weight(params, phase, foot):
    """Piecewise-linear stance weight in [0, 1]; ramps span the double support."""
    phase = wrap_phase(phase)
    if foot == mod.RIGHT:
        phase = wrap_phase(phase + 0.5)
    ds = params.double_support_fraction
    if ds == 0.0:
        return 1.0 if phase < 0.5 else 0.0
    if phase < ds:
        return phase / ds
    if phase < 0.5:
        return 1.0
    if phase < 0.5 + ds:
        return 1.0 - (phase - 0.5) / ds
    return 0.0


def stance_phase(params, phase, foot):
    """Fraction through the foot's stance window, or None during swing."""
    phase = wrap_phase(phase)
    if foot == mod.RIGHT:
        phase = wrap_phase(phase + 0.5)
    window = _stance_window(params)
    if phase < window:
        return phase / window
    return None


def _foot_curves(params, speed, phase, base_z):
    """(x_ref, f_ref) for the left foot at a left-leg phase in [0, 1).

    Foot heights are generated above the ground and expressed relative to
    the (bouncing) base reference height ``base_z``.
    """
    window = _stance_window(params)
    period = params.cycle_period
    step = speed * window * period          # stance travel relative to the base
    ahead = params.com_forward
    pos = np.array([ahead, params.lateral_offset, -base_z])
    force = np.zeros(3)

    if phase < window:
        s = phase / window
        pos[0] = ahead + 0.5 * step - step * s
        amp = params.total_mass * GRAVITY / window
        force[2] = amp * math.sin(math.pi * s) ** 2
        # horizontal components point the leg force from the foot through
        # the body COM, like a spring-leg: no moment about the body.
        # Forward this is a braking-then-propulsion profile antisymmetric
        # about mid-stance with amplitude proportional to the speed.
        scale = params.horizontal_force_scale * force[2] / (-pos[2])
        force[0] = -scale * (pos[0] - ahead)
        force[1] = -scale * pos[1]
    else:
        s = (phase - window) / (1.0 - window)
        pos[0] = ahead - 0.5 * step + step * _quintic(s)
        if s < 0.5:
            lift = _quintic(2.0 * s)
        else:
            lift = 1.0 - _quintic(2.0 * s - 1.0)
        pos[2] = params.swing_apex * lift - base_z
    return pos, force


def sample(params, speed, phase):
    """Reference sample at a commanded speed and cycle phase."""
    lo, hi = params.speed_range
    if not (lo <= speed <= hi):
        raise ValueError(
            f"speed {speed} outside the reference range [{lo}, {hi}]")
    phase = wrap_phase(phase)
    mirror = np.array([1.0, -1.0, 1.0])
    zpos_ref, zvel_ref = base_height_ref(params, phase)
    x_left, f_left = _foot_curves(params, speed, phase, zpos_ref)
    x_right, f_right = _foot_curves(params, speed, wrap_phase(phase + 0.5),
                                    zpos_ref)
    return ReferenceSample(
        x_ref_left=x_left,
        x_ref_right=x_right * mirror,
        f_ref_left=f_left,
        f_ref_right=f_right * mirror,
        phi_left=transition_weight(params, phase, mod.LEFT),
        phi_right=transition_weight(params, phase, mod.RIGHT),
        base_xvel_ref=speed,
        base_zvel_ref=zvel_ref,
        base_zpos_ref=zpos_ref,
        theta_ref=params.theta_ref.copy(),
    )


# ---------------------------------------------------------------------------
# Joint-space references (inverse kinematics for the baseline action space)
# ---------------------------------------------------------------------------

# per-leg joint roles in the actuated vector: [hip-yaw, hip-roll, hip-pitch,
# knee, foot-pitch]; hip-yaw and foot-pitch are pinned to theta_ref.
_IK_JOINTS = (1, 2, 3)       # leg-local indices solved by IK
_PINNED = (0, 4)
_SEED = np.array([0.0, 0.0, -0.4, 0.8, -0.4])


def leg_slice(foot):
    return slice(0, 5) if foot == mod.LEFT else slice(5, 10)


def _solve_leg(model, foot, target, theta_ref_pair, seed, tol=1e-10,
               max_iter=100):
    angles = seed.copy()
    angles[_PINNED[0]] = theta_ref_pair[0]
    angles[_PINNED[1]] = theta_ref_pair[1]
    full = np.zeros(model.nj)
    state = mod.default_state(model)
    sl = leg_slice(foot)
    lam2 = 1e-6
    for _ in range(max_iter):
        full[sl] = angles
        state.joint_angles = full
        fk = mod.forward_kinematics(model, state)
        err = target - fk.foot_rel[foot]
        if err @ err < tol * tol:
            break
        jac_full = mod.foot_jacobian(model, state, foot, fk=fk)
        cols = [6 + (sl.start + j) for j in _IK_JOINTS]
        jac = jac_full[:, cols]
        jjt = jac @ jac.T + lam2 * np.eye(3)
        step = jac.T @ np.linalg.solve(jjt, err)
        step = np.clip(step, -0.5, 0.5)
        for k, j in enumerate(_IK_JOINTS):
            angles[j] += step[k]
    full[sl] = angles
    state.joint_angles = full
    residual = np.linalg.norm(
        mod.forward_kinematics(model, state).foot_rel[foot] - target)
    return angles, residual


def joint_reference(model, ref, seed_angles=None):
    """10-vector of joint angles whose FK reproduces the reference feet.

    Damped-least-squares IK per leg over {hip-roll, hip-pitch, knee}; hip-yaw
    and foot-pitch stay pinned at theta_ref.  Raises WorkspaceError when the
    residual exceeds 1e-3 m.
    """
    out = np.zeros(10)
    for foot, side in zip((mod.LEFT, mod.RIGHT), ("left", "right")):
        pair = (ref.theta_ref[0], ref.theta_ref[1]) if foot == mod.LEFT else \
            (ref.theta_ref[2], ref.theta_ref[3])
        seed = _SEED if seed_angles is None else \
            np.asarray(seed_angles, dtype=float)[leg_slice(foot)]
        angles, residual = _solve_leg(model, foot, ref.x_ref(foot), pair, seed)
        if residual > 1e-3:
            raise WorkspaceError(
                f"{side} foot reference {ref.x_ref(foot)} unreachable "
                f"(IK residual {residual:.2e} m)")
        out[leg_slice(foot)] = angles
    return out


def flat_foot_theta_ref(model, params, speed=0.0, phase=0.25):
    """Neutral hip-yaw/foot-pitch targets that level the soles at mid-stance.

    A flat sole requires foot pitch equal to minus the accumulated leg pitch,
    which depends on the crouch the gait demands; a short fixed-point
    iteration over the IK settles it.
    """
    import dataclasses

    theta = params.theta_ref.copy()
    for _ in range(4):
        trial = dataclasses.replace(params, theta_ref=theta)
        ref = sample(trial, speed, phase)
        joints = joint_reference(model, ref)
        pitch = -(joints[2] + joints[3])  # hip-pitch + knee of the left leg
        theta = np.array([0.0, pitch, 0.0, pitch])
    return theta


def static_com_forward(model, params, speed=0.0, phase=0.25):
    """Forward COM offset from the base at the nominal crouch.

    Stance references center the feet under the whole-body COM; placing them
    under the base origin instead leaves a constant pitch moment.
    """
    import dataclasses

    from . import model as mod_  # local alias, avoids cycle at import time

    offset = params.com_forward
    for _ in range(4):
        trial = dataclasses.replace(params, com_forward=offset)
        ref = sample(trial, speed, phase)
        joints = joint_reference(model, ref)
        state = mod_.default_state(model, joint_angles=joints)
        fk = mod_.forward_kinematics(model, state)
        total = 0.0
        com_x = 0.0
        for i, body in enumerate(model.bodies):
            world = fk.pos[i] + fk.rot[i] @ body.com
            com_x += body.mass * world[0]
            total += body.mass
        offset = com_x / total - state.base_position[0]
    return offset


def dump_cycle(params, speed, rate=2000):
    """One full cycle of references sampled at ``rate`` Hz (for `refdump`)."""
    n = int(round(params.cycle_period * rate))
    rows = []
    for i in range(n):
        phase = i / n
        ref = sample(params, speed, phase)
        rows.append([
            phase,
            *ref.x_ref_left, *ref.f_ref_left, ref.phi_left,
            *ref.x_ref_right, *ref.f_ref_right, ref.phi_right,
            ref.base_xvel_ref, ref.base_zvel_ref, ref.base_zpos_ref,
        ])
    return rows


DUMP_COLUMNS = [
    "phase",
    "xref_l_x", "xref_l_y", "xref_l_z", "fref_l_x", "fref_l_y", "fref_l_z",
    "phi_l",
    "xref_r_x", "xref_r_y", "xref_r_z", "fref_r_x", "fref_r_y", "fref_r_z",
    "phi_r",
    "base_xvel_ref", "base_zvel_ref", "base_zpos_ref",
]
