"""Pure-Python control-window kernel (reference backend).

Runs the 2 kHz inner loop for one policy step: controller torque, contact,
integration, cost accumulation.  Semantically identical to the compiled
kernel in ``_fastcore``; this implementation simply composes the unit-tested
module functions and is the behavioral reference for the backend-equivalence
tests.
"""

from __future__ import annotations

import numpy as np

from . import contact as con
from . import model as mod
from . import reward as rew
from . import tsid

TASK_MODE = 0
JOINT_MODE = 1


class PyWindowKernel:
    """Window kernel backed by the numpy reference implementations."""

    name = "python"

    def __init__(self, model, gains, baseline_kp, baseline_kd, contact_params):
        self.model = model
        self.gains = gains
        self.baseline_kp = np.broadcast_to(np.asarray(baseline_kp, float), (10,))
        self.baseline_kd = np.broadcast_to(np.asarray(baseline_kd, float), (10,))
        self.contact_params = contact_params

    def run_window(self, qpos, qvel, prev_base_vel, command, dt, n_ticks,
                   termination_height):
        """Advance physics by up to ``n_ticks``; returns a result dict.

        ``command`` is the dict produced by ``env._window_command``.  Costs
        are evaluated on each pre-step state, so every visited state is
        costed exactly once across consecutive windows.
        """
        model = self.model
        state = mod.GeneralizedState.from_flat(qpos, qvel, model.nj)
        cost_sums = np.zeros(rew.N_STATE_TERMS)
        grf_sum = np.zeros((2, 3))
        prev_vel = np.asarray(prev_base_vel, dtype=float).copy()
        ticks = 0
        fell = False
        diverged = False
        singular_ticks = 0

        ref = _RefView(command)
        ctrl_command = tsid.ControlCommand(
            x_delta_left=command["x_delta"][0],
            x_delta_right=command["x_delta"][1],
            theta_delta=np.zeros(4),
            reference=ref)

        for _ in range(n_ticks):
            fk = mod.forward_kinematics(model, state)
            vels = con.body_spatial_velocities(model, state, fk=fk)
            self._accumulate_costs(state, fk, vels, command, prev_vel, dt,
                                   cost_sums)
            prev_vel = state.base_lin_vel.copy()

            if command["mode"] == TASK_MODE:
                out = tsid.compute_command(model, state, ctrl_command,
                                           self.gains)
                if out.singular:
                    singular_ticks += 1
            else:
                out = tsid.joint_pd_baseline(
                    model, state, command["joint_target"], np.zeros(10),
                    self.baseline_kp, self.baseline_kd)

            contacts = con.contact_forces(model, state, self.contact_params,
                                          fk=fk, vels=vels)
            for c in contacts:
                grf_sum[c.foot] += c.force
            try:
                state = con.step_physics(model, state, out.tau,
                                         self.contact_params, dt,
                                         contacts=contacts, fk=fk)
            except con.SimulationDiverged:
                diverged = True
                ticks += 1
                break
            ticks += 1
            if state.base_position[2] < termination_height:
                fell = True
                break

        return {
            "qpos": state.qpos, "qvel": state.qvel,
            "ticks": ticks, "fell": fell, "diverged": diverged,
            "cost_sums": cost_sums, "grf_sum": grf_sum,
            "singular_ticks": singular_ticks,
            "prev_base_vel": prev_vel,
        }

    def _accumulate_costs(self, state, fk, vels, command, prev_vel, dt, sums):
        model = self.model
        ground = self.contact_params.ground_height
        foot_z = np.empty(2)
        foot_speed = np.empty(2)
        foot_quat_w = np.empty(2)
        for f in (mod.LEFT, mod.RIGHT):
            body = model.foot_body[f]
            foot_z[f] = fk.foot_world[f][2] - ground
            v_local = vels[body, 3:6] + np.cross(vels[body, 0:3],
                                                 model.foot_offset[f])
            foot_speed[f] = np.linalg.norm(fk.rot[body] @ v_local)
            foot_quat_w[f] = abs(mod.mat_to_quat(fk.rot[body])[0])
        accel = (state.base_lin_vel - prev_vel) / dt
        sums += rew.tick_costs(
            foot_z, foot_speed, foot_quat_w, command["phi"],
            state.base_position[1], state.base_position[2],
            state.base_lin_vel, accel, state.base_ang_vel,
            abs(state.base_orientation[0]),
            command["xvel_ref"], command["zvel_ref"], command["zpos_ref"],
            command["swing_apex"])


class _RefView:
    """Adapts a window-command dict to the controller's reference interface."""

    def __init__(self, command):
        self._x_ref = command["x_ref"]
        self._f_ref = command["f_ref"]
        self._phi = command["phi"]
        self.theta_ref = command["theta_target"]

    def x_ref(self, foot):
        return self._x_ref[foot]

    def f_ref(self, foot):
        return self._f_ref[foot]

    def phi(self, foot):
        return self._phi[foot]
