"""Penalty ground contact and the semi-implicit Euler physics step.

Each foot touches the ground through two points (toe and heel).  A point
penetrating the ground plane receives a spring-damper normal force (clamped
to be nonnegative, so the ground never pulls) and a velocity-damped
tangential force clamped to the friction cone.  Forces enter the equation of
motion through the world-frame point Jacobians alongside the actuation
selector, and velocities are integrated before positions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model as mod


class SimulationDiverged(RuntimeError):
    """Raised when the integrator produces a non-finite state."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


@dataclass
class ContactParams:
    ground_height: float = 0.0
    normal_stiffness: float = 5e4     # N/m
    normal_damping: float = 5e3       # N s/m
    friction_coefficient: float = 1.0
    tangential_damping: float = 1e3   # N s/m

    def validate(self):
        if self.normal_stiffness < 0 or self.normal_damping < 0:
            raise ValueError("contact stiffness/damping must be >= 0")
        if self.friction_coefficient < 0 or self.tangential_damping < 0:
            raise ValueError("friction parameters must be >= 0")


@dataclass
class ContactPoint:
    foot: int
    body: int
    point: np.ndarray   # world
    force: np.ndarray   # world


def body_spatial_velocities(model, state, fk=None):
    """Body-frame spatial velocities [w; v_origin] for every body."""
    if fk is None:
        fk = mod.forward_kinematics(model, state)
    nb = model.nb
    vel = np.zeros((nb, 6))
    vel[0, 0:3] = state.base_ang_vel
    vel[0, 3:6] = fk.rot[0].T @ state.base_lin_vel
    for i in range(1, nb):
        p = model.joints[i].parent
        rot_pc, pos_pc = mod._joint_transform(model, state, i)
        vel[i] = mod._motion_to_child(rot_pc, pos_pc, vel[p])
        vel[i, 0:3] += model.joints[i].axis * state.joint_rates[i - 1]
    return vel


def _point_state(model, fk, vels, foot, which):
    """World position and velocity of one contact point (0=toe, 1=heel)."""
    body = model.foot_body[foot]
    local = model.foot_offset[foot] + np.array(
        [model.contact_x[which], 0.0, 0.0])
    point = fk.pos[body] + fk.rot[body] @ local
    v_local = vels[body, 3:6] + np.cross(vels[body, 0:3], local)
    velocity = fk.rot[body] @ v_local
    return body, point, velocity


def _penalty_force(point, velocity, params):
    depth = params.ground_height - point[2]
    if depth <= 0.0:
        return None
    normal = params.normal_stiffness * depth - params.normal_damping * velocity[2]
    normal = max(normal, 0.0)
    tangential = -params.tangential_damping * velocity[0:2]
    cap = params.friction_coefficient * normal
    scale = np.linalg.norm(tangential)
    if scale > cap:
        tangential = tangential * (cap / scale) if scale > 0.0 else tangential
    return np.array([tangential[0], tangential[1], normal])


def contact_forces(model, state, params, fk=None, vels=None):
    """Active contact points with world forces, grouped per foot."""
    if fk is None:
        fk = mod.forward_kinematics(model, state)
    if vels is None:
        vels = body_spatial_velocities(model, state, fk=fk)
    contacts = []
    for foot in range(len(model.foot_body)):
        for which in (0, 1):
            body, point, velocity = _point_state(model, fk, vels, foot, which)
            force = _penalty_force(point, velocity, params)
            if force is not None:
                contacts.append(ContactPoint(foot=foot, body=body,
                                             point=point, force=force))
    return contacts


def generalized_contact_force(model, fk, contacts):
    """Sum of J_point^T F over active contacts."""
    q_ext = np.zeros(6 + model.nj)
    for c in contacts:
        jac = mod.point_jacobian_world(model, fk, c.body, c.point)
        q_ext += jac.T @ c.force
    return q_ext


def step_physics(model, state, tau, params, dt, contacts=None, fk=None):
    """One semi-implicit Euler step of the full contact dynamics."""
    if fk is None:
        fk = mod.forward_kinematics(model, state)
    if contacts is None:
        contacts = contact_forces(model, state, params, fk=fk)
    applied = np.zeros(model.nv)
    applied[model.actuated_qvel] = tau
    applied[6:] -= model.joint_damping * state.joint_rates
    applied += generalized_contact_force(model, fk, contacts)
    with np.errstate(invalid="ignore", over="ignore"):
        # non-finite inputs surface as SimulationDiverged below, not warnings
        bias = mod.bias_forces(model, state)
        qacc = np.linalg.solve(mod.mass_matrix(model, state), applied - bias)

    u_new = state.qvel + dt * qacc
    lin, omega, rates = u_new[0:3], u_new[3:6], u_new[6:]
    quat = mod.canonical_quat(mod.quat_mul(
        state.base_orientation, mod.quat_from_rotvec(dt * omega)))
    quat = quat / np.linalg.norm(quat)
    new = mod.GeneralizedState(
        base_position=state.base_position + dt * lin,
        base_orientation=quat,
        joint_angles=state.joint_angles + dt * rates,
        base_lin_vel=lin,
        base_ang_vel=omega,
        joint_rates=rates,
    )
    if not (np.all(np.isfinite(new.qpos)) and np.all(np.isfinite(new.qvel))):
        raise SimulationDiverged("non-finite state after physics step")
    return new
