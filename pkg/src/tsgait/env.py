"""Biped walking environment: 40 Hz policy steps over a 2 kHz physics loop.

Each policy step holds one command (reference sample plus the policy's
residuals) fixed for T = control_rate / policy_rate inner control ticks,
accumulates the reward costs over those ticks, and reports the averaged,
kernelized, weighted reward.  Episodes terminate on a horizon or when the
base drops below the termination height; the initial phase and base velocity
are randomized per episode from a seeded stream.

Observation layout (39 entries):

    [0]      commanded forward velocity
    [1:4]    base linear velocity (world)
    [4:7]    base angular velocity (body)
    [7:11]   base quaternion (w, x, y, z)
    [11:21]  actuated joint positions
    [21:31]  actuated joint rates
    [31:34]  left foot position relative to the base (base frame)
    [34:37]  right foot position relative to the base
    [37:39]  gait phase encoding (sin, cos)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend as bk
from . import model as mod
from . import refgen
from . import reward as rew
from . import tsid
from ._pywindow import JOINT_MODE, TASK_MODE
from .contact import ContactParams

OBS_DIM = 39
ACT_DIM = 10

TASK = "task"
JOINT = "joint"

TIMEOUT = "timeout"
FAILURE = "failure"


@dataclass
class EpisodeConfig:
    horizon: int = 150
    policy_rate: float = 40.0
    control_rate: float = 2000.0
    termination_height: float = 0.6
    speed_command: float = 0.5
    init_phase_random: bool = True
    init_velocity_perturbation: float = 0.3
    seed: int = 0
    sensor_noise: float = 0.0

    def validate(self):
        ratio = self.control_rate / self.policy_rate
        if abs(ratio - 50.0) > 1e-9:
            raise ValueError(
                "control_rate / policy_rate must equal the reward averaging "
                f"window T = 50, got {ratio}")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")

    @property
    def ticks_per_step(self):
        return int(round(self.control_rate / self.policy_rate))


@dataclass
class ResidualAction:
    """Bounded policy output: residual setpoints in one of two action spaces."""

    values: np.ndarray
    mode: str = TASK

    def validate(self):
        if np.max(np.abs(self.values)) > 1.0 + 1e-9:
            raise ValueError("action components must lie in [-1, 1]")
        if self.mode not in (TASK, JOINT):
            raise ValueError(f"unknown action mode '{self.mode}'")


@dataclass
class ActionScale:
    task_residual_bound: float = 0.5    # m per axis on foot setpoints
    joint_residual_bound: float = 0.3   # rad on joint setpoints


class BipedEnv:
    """Single-instance walking environment (owns its state and RNG)."""

    def __init__(self, model=None, gait=None, gains=None,
                 contact_params=None, episode=None, action_mode=TASK,
                 action_scale=None, baseline_kp=100.0, baseline_kd=5.0,
                 reward_weights=None, backend=None):
        self.model = model if model is not None else mod.load_builtin()
        self.gait = gait if gait is not None else refgen.GaitParams(
            total_mass=mod.total_mass(self.model))
        self.gait.validate()
        # level the soles for this model/gait (theta_ref is a neutral constant);
        # the mean-height phase balances the residual tilt across the bounce
        self.gait.theta_ref = refgen.flat_foot_theta_ref(self.model, self.gait,
                                                         phase=0.125)
        # center the stance feet under the whole-body COM
        self.gait.com_forward = refgen.static_com_forward(self.model,
                                                          self.gait)
        self.gains = gains if gains is not None else tsid.TaskGains()
        self.gains.validate()
        self.contact_params = (contact_params if contact_params is not None
                               else ContactParams())
        self.contact_params.validate()
        self.episode = episode if episode is not None else EpisodeConfig()
        self.episode.validate()
        if action_mode not in (TASK, JOINT):
            raise ValueError(f"unknown action mode '{action_mode}'")
        self.action_mode = action_mode
        self.action_scale = action_scale or ActionScale()
        self.weights = reward_weights or rew.RewardWeights()
        self.kernel = bk.select_kernel(
            self.model, self.gains, baseline_kp, baseline_kd,
            self.contact_params, name=backend)

        self.rng = np.random.default_rng(self.episode.seed)
        self._ik_table = None
        self._qpos = None
        self._qvel = None
        self._prev_base_vel = None
        self._prev_action = np.zeros(ACT_DIM)
        self._joint_ref = None
        self.phase = 0.0
        self.speed = self.episode.speed_command
        self.steps = 0
        self._done = True

    # -- initialization ----------------------------------------------------

    def _ik_seed_for(self, phase):
        if self._ik_table is None:
            n = 64
            table = np.zeros((n, 10))
            seed = None
            for i in range(n):
                ref = refgen.sample(self.gait, self.speed, i / n)
                table[i] = refgen.joint_reference(self.model, ref,
                                                  seed_angles=seed)
                seed = table[i]
            self._ik_table = table
        idx = int(refgen.wrap_phase(phase) * len(self._ik_table))
        return self._ik_table[idx % len(self._ik_table)]

    def reset(self, seed=None, phase=None):
        """Start a new episode; returns the initial observation.

        ``phase`` overrides the (possibly randomized) initial cycle phase;
        the exploration study uses it to pin a fixed set of start states.
        """
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        cfg = self.episode
        self.speed = cfg.speed_command
        if phase is not None:
            self.phase = refgen.wrap_phase(phase)
        else:
            self.phase = float(self.rng.uniform()) if cfg.init_phase_random \
                else 0.0
        ref = refgen.sample(self.gait, self.speed, self.phase)
        joints = refgen.joint_reference(self.model, ref,
                                        seed_angles=self._ik_seed_for(self.phase))
        bound = cfg.init_velocity_perturbation
        perturb = self.rng.uniform(-bound, bound, size=3) if bound > 0 else \
            np.zeros(3)

        state = mod.default_state(self.model, joint_angles=joints)
        # sink the base so the contact starts carrying exactly the load the
        # reference demands at this phase; anything less pops the feet free
        demand = mod.total_mass(self.model) * max(
            9.81 + refgen.base_accel_ref(self.gait, self.phase), 1.0)
        points = 2.0 * max(ref.phi_left + ref.phi_right, 0.5)
        sag = demand / (points * self.contact_params.normal_stiffness)
        state.base_position = np.array([0.0, 0.0, ref.base_zpos_ref - sag
                                        + self.contact_params.ground_height])
        state.base_lin_vel = np.array([self.speed, 0.0,
                                       ref.base_zvel_ref]) + perturb
        self._qpos = state.qpos
        self._qvel = state.qvel
        self._prev_base_vel = state.base_lin_vel.copy()
        self._prev_action = np.zeros(ACT_DIM)
        self._joint_ref = joints
        self.steps = 0
        self._done = False
        return self.observe()

    # -- observation -------------------------------------------------------

    def observe(self):
        state = self._state()
        fk = mod.forward_kinematics(self.model, state)
        sin_p, cos_p = refgen.phase_encoding(self.phase)
        idx = self.model.actuated_angle_index
        obs = np.concatenate([
            [self.speed],
            state.base_lin_vel,
            state.base_ang_vel,
            state.base_orientation,
            state.joint_angles[idx],
            state.joint_rates[idx],
            fk.foot_rel[mod.LEFT],
            fk.foot_rel[mod.RIGHT],
            [sin_p, cos_p],
        ])
        if self.episode.sensor_noise > 0.0:
            noise = self.rng.normal(scale=self.episode.sensor_noise,
                                    size=OBS_DIM)
            noise[0] = 0.0
            noise[37:] = 0.0
            obs = obs + noise
        return obs

    def _state(self):
        return mod.GeneralizedState.from_flat(self._qpos, self._qvel,
                                              self.model.nj)

    # -- stepping ----------------------------------------------------------

    def _window_command(self, action):
        ref = refgen.sample(self.gait, self.speed, self.phase)
        command = {
            "x_ref": np.stack([ref.x_ref_left, ref.x_ref_right]),
            "f_ref": np.stack([ref.f_ref_left, ref.f_ref_right]),
            "phi": np.array([ref.phi_left, ref.phi_right]),
            "xvel_ref": ref.base_xvel_ref,
            "zvel_ref": ref.base_zvel_ref,
            "zpos_ref": ref.base_zpos_ref,
            "swing_apex": self.gait.swing_apex,
        }
        if self.action_mode == TASK:
            bound = self.action_scale.task_residual_bound
            jbound = self.action_scale.joint_residual_bound
            command["mode"] = TASK_MODE
            command["x_delta"] = (bound * action[0:6]).reshape(2, 3)
            command["theta_target"] = ref.theta_ref + jbound * action[6:10]
            command["joint_target"] = np.zeros(ACT_DIM)
        else:
            jbound = self.action_scale.joint_residual_bound
            self._joint_ref = refgen.joint_reference(
                self.model, ref, seed_angles=self._joint_ref)
            command["mode"] = JOINT_MODE
            command["x_delta"] = np.zeros((2, 3))
            command["theta_target"] = ref.theta_ref.copy()
            command["joint_target"] = self._joint_ref + jbound * action
        return command, ref

    def step_policy(self, action):
        """Apply one bounded residual action for T control ticks."""
        if self._done:
            raise RuntimeError("episode finished; call reset() first")
        if isinstance(action, ResidualAction):
            action.validate()
            action = action.values
        action = np.clip(np.asarray(action, dtype=float), -1.0, 1.0)

        command, ref = self._window_command(action)
        cfg = self.episode
        result = self.kernel.run_window(
            self._qpos, self._qvel, self._prev_base_vel, command,
            1.0 / cfg.control_rate, cfg.ticks_per_step,
            cfg.termination_height)

        self._qpos = result["qpos"]
        self._qvel = result["qvel"]
        self._prev_base_vel = result["prev_base_vel"]

        ticks = max(result["ticks"], 1)
        fbar = np.append(result["cost_sums"] / ticks,
                         rew.action_smooth_cost(action, self._prev_action))
        breakdown = rew.breakdown_from_costs(fbar, self.weights)
        self._prev_action = action.copy()

        phase_used = self.phase
        self.steps += 1
        self.phase = refgen.advance_phase(self.phase, 1.0 / cfg.policy_rate,
                                          self.gait)
        termination = None
        if result["fell"] or result["diverged"]:
            termination = FAILURE
        elif self.steps >= cfg.horizon:
            termination = TIMEOUT
        self._done = termination is not None

        info = {
            "breakdown": breakdown.as_dict(),
            "grf_mean": result["grf_sum"] / ticks,
            "ticks": result["ticks"],
            "termination": termination,
            "diverged": result["diverged"],
            "singular_ticks": result["singular_ticks"],
            "phase": phase_used,
            "phi": command["phi"],
            "stance_phase": (
                refgen.stance_phase(self.gait, phase_used, mod.LEFT),
                refgen.stance_phase(self.gait, phase_used, mod.RIGHT)),
            "time": self.steps / cfg.policy_rate,
            "base_position": self._qpos[0:3].copy(),
            "base_velocity": self._qvel[0:3].copy(),
            "foot_rel": None,
        }
        obs = self.observe()
        info["foot_rel"] = (obs[31:34].copy(), obs[34:37].copy())
        return obs, breakdown.total, self._done, info


def make_env(action_mode=TASK, seed=0, speed=0.5, backend=None, **episode_kw):
    """Convenience constructor with the bundled model and defaults."""
    episode = EpisodeConfig(seed=seed, speed_command=speed, **episode_kw)
    return BipedEnv(episode=episode, action_mode=action_mode, backend=backend)
