"""Task-space inverse dynamics controller and the joint-PD baseline.

Per leg, the controller blends two laws with the reference transition weight:

* swing: a PD acceleration target on the foot relative to the base, mapped to
  torques through the task-space inertia with a gravity feedforward,
  ``tau = J^T (L xdd_des + L J M^-1 G)`` with ``L = (J M^-1 J^T)^-1``.
  Velocity-product terms are deliberately dropped.
* stance: an impedance force plus the reference feedforward force, mapped by
  the Jacobian transpose, ``tau = J^T (Kp e - Kd xdot + F_ref)``.

Hip-yaw and foot-pitch motors additionally track neutral setpoints with a
plain joint PD.  All quantities are foot-relative-to-base in the base frame;
the Jacobians therefore have zero base columns and the transpose maps cleanly
onto the actuated joints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import model as mod

# task-space inertia conditioning guard
COND_LIMIT = 1e8
REG_EPSILON = 1e-6

# Reference feedforward forces are stored in ground-reaction convention
# (vertical >= 0).  The Jacobian-transpose law needs the force the foot
# applies against the ground, the Newton pair of the GRF.
GRF_TO_APPLIED = -1.0

# actuated-vector indices of the orientation-controlled motors, in the
# theta order [left hip-yaw, left foot-pitch, right hip-yaw, right foot-pitch]
ORIENT_INDICES = (0, 4, 5, 9)


@dataclass
class TaskGains:
    kp_swing: np.ndarray = field(
        default_factory=lambda: np.array([300.0, 150.0, 400.0]))  # 1/s^2
    kd_swing: np.ndarray = field(
        default_factory=lambda: np.array([10.0, 3.0, 10.0]))      # 1/s
    kp_stance: np.ndarray = field(
        default_factory=lambda: np.array([300.0, 150.0, 400.0]))  # N/m
    kd_stance: np.ndarray = field(
        default_factory=lambda: np.array([10.0, 3.0, 10.0]))      # N s/m
    kp_joint: np.ndarray = field(
        default_factory=lambda: np.array([100.0, 50.0]))          # N m/rad
    kd_joint: np.ndarray = field(
        default_factory=lambda: np.array([10.0, 5.0]))            # N m s/rad

    def validate(self):
        for name in ("kp_swing", "kd_swing", "kp_stance", "kd_stance",
                     "kp_joint", "kd_joint"):
            if np.any(np.asarray(getattr(self, name)) <= 0.0):
                raise ValueError(f"{name} must be positive")


@dataclass
class ControlCommand:
    """Policy-facing command: residual setpoints plus the reference sample."""

    x_delta_left: np.ndarray
    x_delta_right: np.ndarray
    theta_delta: np.ndarray
    reference: object

    def x_delta(self, foot):
        return self.x_delta_left if foot == mod.LEFT else self.x_delta_right


@dataclass
class TorqueCommand:
    tau: np.ndarray
    singular: bool = False


def hold_command(reference):
    """Zero-residual command: the controller tracks the raw references."""
    return ControlCommand(
        x_delta_left=np.zeros(3), x_delta_right=np.zeros(3),
        theta_delta=np.zeros(4), reference=reference)


@dataclass
class _Dynamics:
    """Shared per-tick dynamics quantities (one evaluation for both legs)."""

    fk: object
    minv_g: np.ndarray
    mass: np.ndarray
    align: np.ndarray   # heading frame <- base frame rotation


def heading_alignment(base_rot):
    """Rotation from the base frame into the gravity-aligned heading frame.

    The frame shares the base yaw but keeps z vertical, so the diagonal
    forward/lateral/vertical gains act about gravity instead of following
    the torso tilt (a tilted spring frame feeds the tilt back on itself).
    """
    yaw = np.arctan2(base_rot[1, 0], base_rot[0, 0])
    c, s = np.cos(yaw), np.sin(yaw)
    yaw_rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return yaw_rot.T @ base_rot


def _dynamics(model, state):
    mass = mod.mass_matrix(model, state)
    grav = mod.gravity_vector(model, state)
    fk = mod.forward_kinematics(model, state)
    return _Dynamics(fk=fk, minv_g=np.linalg.solve(mass, grav), mass=mass,
                     align=heading_alignment(fk.rot[0]))


def _task_inertia_solve(mass, jac, rhs):
    """Solve (J M^-1 J^T) x = rhs with a conditioning guard.

    Returns (x, singular).  Near kinematic singularities the matrix is
    regularized by REG_EPSILON and the flag is raised.
    """
    w = jac @ np.linalg.solve(mass, jac.T)
    w = 0.5 * (w + w.T)
    eig = np.linalg.eigvalsh(w)
    singular = eig[0] <= 0.0 or eig[2] / max(eig[0], 1e-300) > COND_LIMIT
    if singular:
        w = w + REG_EPSILON * np.eye(3)
    return np.linalg.solve(w, rhs), singular


def swing_torque(model, state, command, foot, gains, dyn=None):
    """Swing-leg torque; returns (10-vector, singular flag).

    Implements the acceleration PD with the task-space inertia and gravity
    feedforward; no Coriolis or Jacobian-rate terms appear.  When the task
    inertia is near-singular the PD part is dropped and only the (regularized)
    gravity compensation survives.
    """
    if dyn is None:
        dyn = _dynamics(model, state)
    jac = dyn.align @ mod.foot_jacobian(model, state, foot, fk=dyn.fk)
    x = dyn.align @ dyn.fk.foot_rel[foot]
    xdot = jac @ state.qvel
    ref = command.reference
    # reference setpoints are gravity-aligned quantities: only the measured
    # foot position rotates into the heading frame (rotating the target
    # with the torso would make the springs chase the tilt)
    err = ref.x_ref(foot) + command.x_delta(foot) - x
    xdd_des = gains.kp_swing * err - gains.kd_swing * xdot
    grav_task = jac @ dyn.minv_g
    force, singular = _task_inertia_solve(dyn.mass, jac,
                                          xdd_des + grav_task)
    if singular:
        force, _ = _task_inertia_solve(dyn.mass, jac, grav_task)
    tau_full = jac.T @ force
    return tau_full[model.actuated_qvel], singular


def stance_force(model, state, command, foot, gains, dyn=None):
    """Desired stance foot force: impedance plus the feedforward profile.

    Expressed in the foot-relative-to-base frame the impedance acts on, so
    the reference GRF profile enters through its Newton pair (see
    GRF_TO_APPLIED): pressing the foot down holds the base up.
    """
    if dyn is None:
        dyn = _dynamics(model, state)
    jac = dyn.align @ mod.foot_jacobian(model, state, foot, fk=dyn.fk)
    x = dyn.align @ dyn.fk.foot_rel[foot]
    xdot = jac @ state.qvel
    ref = command.reference
    err = ref.x_ref(foot) + command.x_delta(foot) - x
    return (gains.kp_stance * err - gains.kd_stance * xdot
            + GRF_TO_APPLIED * ref.f_ref(foot))


def stance_torque(model, state, command, foot, gains, dyn=None):
    """Stance-leg torque: Jacobian-transpose mapping of the impedance force."""
    if dyn is None:
        dyn = _dynamics(model, state)
    jac = dyn.align @ mod.foot_jacobian(model, state, foot, fk=dyn.fk)
    force = stance_force(model, state, command, foot, gains, dyn=dyn)
    tau_full = jac.T @ force
    return tau_full[model.actuated_qvel]


def blend(tau_stance, tau_swing, phi):
    """Affine stance/swing blend; exact at the endpoints."""
    if not 0.0 <= phi <= 1.0:
        raise ValueError(f"transition weight {phi} outside [0, 1]")
    return phi * tau_stance + (1.0 - phi) * tau_swing


def orientation_torque(model, state, command, gains):
    """Joint PD on the hip-yaw and foot-pitch motors (10-vector, rest zero)."""
    ref = command.reference
    angle_idx = model.actuated_angle_index
    tau = np.zeros(10)
    for k, idx in enumerate(ORIENT_INDICES):
        kp = gains.kp_joint[k % 2]
        kd = gains.kd_joint[k % 2]
        target = ref.theta_ref[k] + command.theta_delta[k]
        tau[idx] = kp * (target - state.joint_angles[angle_idx[idx]]) \
            - kd * state.joint_rates[angle_idx[idx]]
    return tau


def compute_command(model, state, command, gains):
    """Full torque command: blended leg torques plus orientation PD, clamped."""
    dyn = _dynamics(model, state)
    tau = np.zeros(10)
    singular = False
    for foot in (mod.LEFT, mod.RIGHT):
        swing, flag = swing_torque(model, state, command, foot, gains, dyn=dyn)
        stance = stance_torque(model, state, command, foot, gains, dyn=dyn)
        tau += blend(stance, swing, command.reference.phi(foot))
        singular = singular or flag
    tau += orientation_torque(model, state, command, gains)
    tau = np.clip(tau, -model.torque_limit, model.torque_limit)
    return TorqueCommand(tau=tau, singular=singular)


def joint_pd_baseline(model, state, joint_ref, joint_delta, kp, kd):
    """Residual joint-setpoint PD over all 10 actuated joints."""
    kp = np.broadcast_to(np.asarray(kp, dtype=float), (10,))
    kd = np.broadcast_to(np.asarray(kd, dtype=float), (10,))
    idx = model.actuated_angle_index
    err = joint_ref + joint_delta - state.joint_angles[idx]
    tau = kp * err - kd * state.joint_rates[idx]
    tau = np.clip(tau, -model.torque_limit, model.torque_limit)
    return TorqueCommand(tau=tau, singular=False)
