"""Environment tests: contact law, integrator physics, the 40 Hz loop."""

import numpy as np
import pytest

from tsgait import contact as con
from tsgait import env as envmod
from tsgait import model as mod
from tsgait import refgen
from conftest import random_state

DT = 5e-4


def make_python_env(**kw):
    kw.setdefault("backend", "python")
    return envmod.make_env(**kw)


# ---------------------------------------------------------------------------
# Contact law
# ---------------------------------------------------------------------------

def test_no_force_above_ground():
    params = con.ContactParams()
    assert con._penalty_force(np.array([0.0, 0.0, 0.01]), np.zeros(3),
                              params) is None


def test_static_penetration_linear_law():
    params = con.ContactParams(normal_stiffness=1e5, normal_damping=0.0)
    force = con._penalty_force(np.array([0.0, 0.0, -0.001]), np.zeros(3),
                               params)
    assert force[2] == pytest.approx(100.0)
    np.testing.assert_allclose(force[0:2], 0.0)


def test_damping_resists_penetration_and_never_pulls():
    params = con.ContactParams(normal_stiffness=1e5, normal_damping=1e3)
    sinking = con._penalty_force(np.array([0, 0, -0.001]),
                                 np.array([0, 0, -0.2]), params)
    assert sinking[2] == pytest.approx(100.0 + 200.0)
    rising_fast = con._penalty_force(np.array([0, 0, -0.001]),
                                     np.array([0, 0, 0.5]), params)
    assert rising_fast[2] == 0.0


def test_friction_cone_clamp_on_scripted_slide():
    params = con.ContactParams(friction_coefficient=0.8)
    for speed in np.linspace(0.0, 2.0, 40):
        force = con._penalty_force(np.array([0, 0, -0.002]),
                                   np.array([speed, 0.1, 0.0]), params)
        normal = force[2]
        tangent = np.hypot(force[0], force[1])
        assert normal >= 0.0
        assert tangent <= params.friction_coefficient * normal + 1e-12


def test_biped_contact_points_grouped_per_foot(biped):
    state = mod.default_state(biped, base_height=1.15)  # feet slightly below 0
    contacts = con.contact_forces(biped, state, con.ContactParams())
    assert len(contacts) == 4  # toe and heel on both feet
    assert {c.foot for c in contacts} == {0, 1}
    for c in contacts:
        assert c.force[2] >= 0.0


# ---------------------------------------------------------------------------
# Integrator
# ---------------------------------------------------------------------------

def test_force_free_translation_is_exact(free_body):
    from conftest import zero_gravity
    model = zero_gravity(free_body)
    state = mod.default_state(model, base_height=2.0)
    state.base_lin_vel = np.array([0.3, -0.2, 0.1])
    params = con.ContactParams()
    for _ in range(1000):
        state = con.step_physics(model, state, np.zeros(0), params, DT)
    np.testing.assert_allclose(state.base_lin_vel, [0.3, -0.2, 0.1],
                               atol=1e-8)
    np.testing.assert_allclose(state.base_ang_vel, np.zeros(3), atol=1e-8)


def test_free_fall_velocity(biped):
    state = mod.default_state(biped, base_height=3.0)
    params = con.ContactParams()
    for _ in range(200):  # 0.1 s
        state = con.step_physics(biped, state, np.zeros(10), params, DT)
    assert state.base_lin_vel[2] == pytest.approx(-0.981, abs=1e-9)
    # uniform gravity induces no joint motion
    np.testing.assert_allclose(state.joint_rates, np.zeros(10), atol=1e-9)


def test_pendulum_energy_audit(pendulum):
    state = mod.default_state(pendulum, base_height=5.0)
    state.joint_rates = np.array([2.0, -1.5])
    state.base_ang_vel = np.array([0.3, 0.4, -0.2])
    e0 = mod.kinetic_energy(pendulum, state) + mod.potential_energy(pendulum,
                                                                    state)
    params = con.ContactParams()
    for _ in range(2000):  # 1 s at dt = 5e-4, stays far above the ground
        state = con.step_physics(pendulum, state, np.zeros(0), params, DT)
    e1 = mod.kinetic_energy(pendulum, state) + mod.potential_energy(pendulum,
                                                                    state)
    assert abs(e1 - e0) / abs(e0) < 0.02


def test_divergence_detected(free_body):
    state = mod.default_state(free_body, base_height=1.0)
    state.base_lin_vel = np.array([np.inf, 0.0, 0.0])
    with pytest.raises(con.SimulationDiverged):
        con.step_physics(free_body, state, np.zeros(0), con.ContactParams(),
                         DT)


# ---------------------------------------------------------------------------
# Policy-step loop
# ---------------------------------------------------------------------------

def test_reset_is_phase_consistent_and_deterministic():
    env = make_python_env(seed=7, init_phase_random=False,
                          init_velocity_perturbation=0.0)
    obs = env.reset()
    # canonical start: zero phase encoding, commanded speed passthrough
    assert obs[0] == pytest.approx(0.5)
    assert obs[37] == pytest.approx(0.0)
    assert obs[38] == pytest.approx(1.0)
    ref = refgen.sample(env.gait, env.speed, 0.0)
    np.testing.assert_allclose(obs[31:34], ref.x_ref_left, atol=1e-4)
    np.testing.assert_allclose(obs[34:37], ref.x_ref_right, atol=1e-4)
    obs2 = env.reset(seed=123)
    obs3 = make_python_env(seed=7, init_phase_random=False,
                           init_velocity_perturbation=0.0).reset(seed=123)
    np.testing.assert_array_equal(obs2, obs3)


def test_observation_layout_matches_state():
    env = make_python_env(seed=3)
    env.reset()
    obs = env.observe()
    state = env._state()
    fk = mod.forward_kinematics(env.model, state)
    sin_p, cos_p = refgen.phase_encoding(env.phase)
    assembled = np.concatenate([
        [env.speed], state.base_lin_vel, state.base_ang_vel,
        state.base_orientation, state.joint_angles, state.joint_rates,
        fk.foot_rel[0], fk.foot_rel[1], [sin_p, cos_p]])
    assert obs.shape == (envmod.OBS_DIM,)
    np.testing.assert_array_equal(obs, assembled)


def test_rate_contract_and_timeout():
    env = make_python_env(seed=1, horizon=5, init_velocity_perturbation=0.05)
    env.reset()
    done = False
    steps = 0
    while not done:
        obs, reward, done, info = env.step_policy(np.zeros(10))
        steps += 1
        assert info["ticks"] == 50
        assert 0.0 < reward <= 1.0
    assert steps == 5
    assert info["termination"] == envmod.TIMEOUT
    assert info["time"] == pytest.approx(5 / 40.0)
    with pytest.raises(RuntimeError):
        env.step_policy(np.zeros(10))


def test_failure_termination_at_height():
    env = make_python_env(seed=2, horizon=400, init_phase_random=False,
                          init_velocity_perturbation=0.0)
    env.reset()
    # drive the base down hard: constant maximal downward foot extension
    action = np.zeros(10)
    action[2] = 1.0   # left foot z residual +0.1 (feet pulled up -> base drops)
    action[5] = 1.0
    env._qvel[2] = -3.0  # strong downward push
    done = False
    for _ in range(60):
        obs, reward, done, info = env.step_policy(action)
        if done:
            break
    assert done and info["termination"] == envmod.FAILURE
    assert env._qpos[2] < 0.6
    assert info["ticks"] <= 50


def test_failure_flagged_on_first_crossing_tick():
    # raised termination line so the crossing happens mid-window
    line = 0.93
    env = make_python_env(seed=5, init_phase_random=False,
                          init_velocity_perturbation=0.0,
                          termination_height=line)
    env.reset()
    env._qvel[2] = -2.0
    qpos0, qvel0 = env._qpos.copy(), env._qvel.copy()
    obs, reward, done, info = env.step_policy(np.zeros(10))
    assert done and info["termination"] == envmod.FAILURE
    assert 0 < info["ticks"] < 50
    # replay with shorter windows: one tick earlier the base was still above
    env2 = make_python_env(seed=5, init_phase_random=False,
                           init_velocity_perturbation=0.0,
                           termination_height=line)
    env2.reset()
    env2._qvel[2] = -2.0
    command, _ = env2._window_command(np.zeros(10))
    result = env2.kernel.run_window(qpos0, qvel0, qvel0[0:3], command,
                                    1 / 2000.0, 50, line)
    assert result["fell"]
    assert result["ticks"] == info["ticks"]
    assert result["qpos"][2] < line
    shorter = env2.kernel.run_window(qpos0, qvel0, qvel0[0:3], command,
                                     1 / 2000.0, info["ticks"] - 1, line)
    assert not shorter["fell"]
    assert shorter["qpos"][2] >= line


def test_episode_determinism_bitwise():
    streams = []
    for _ in range(2):
        env = make_python_env(seed=11, horizon=6)
        obs = env.reset(seed=42)
        rng = np.random.default_rng(99)
        record = [obs.copy()]
        rewards = []
        done = False
        while not done:
            action = rng.uniform(-0.5, 0.5, size=10)
            obs, reward, done, info = env.step_policy(action)
            record.append(obs.copy())
            rewards.append(reward)
        streams.append((np.stack(record), np.array(rewards)))
    np.testing.assert_array_equal(streams[0][0], streams[1][0])
    np.testing.assert_array_equal(streams[0][1], streams[1][1])


def test_reset_phase_distribution_uniform():
    env = make_python_env(seed=1234)
    env._ik_seed_for(0.0)  # build the warm-start table once
    phases = []
    for _ in range(10000):
        env.reset()
        phases.append(env.phase)
    phases = np.sort(phases)
    n = len(phases)
    # one-sample Kolmogorov-Smirnov statistic against Uniform[0, 1)
    grid = (np.arange(1, n + 1)) / n
    ks = max(np.max(np.abs(grid - phases)),
             np.max(np.abs(phases - (np.arange(n)) / n)))
    assert ks < 0.02


def test_residual_action_dataclass_bounds():
    act = envmod.ResidualAction(values=np.zeros(10), mode=envmod.TASK)
    act.validate()
    bad = envmod.ResidualAction(values=np.full(10, 1.5), mode=envmod.TASK)
    with pytest.raises(ValueError):
        bad.validate()


def test_joint_mode_runs_and_differs_from_task():
    env_t = make_python_env(seed=21, action_mode=envmod.TASK, horizon=3)
    env_j = make_python_env(seed=21, action_mode=envmod.JOINT, horizon=3)
    obs_t = env_t.reset(seed=5)
    obs_j = env_j.reset(seed=5)
    np.testing.assert_array_equal(obs_t, obs_j)  # same start state
    action = np.full(10, 0.2)
    next_t = env_t.step_policy(action)[0]
    next_j = env_j.step_policy(action)[0]
    assert not np.allclose(next_t, next_j)  # different torque laws
