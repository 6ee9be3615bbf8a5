"""Acceptance suite: one test per criterion, at the stated tolerances.

Long-running criteria honor two environment switches:

* TSGAIT_SLOW=1  enables the full-size exploration study (3 seeds x 50,000
  samples, ~20 min) instead of a reduced-sample version of the same
  directional assertions.
* TSGAIT_FULL=1  enables the full sample-efficiency protocol (300
  iterations x 5 seeds x 2 action spaces; hours).  The 30-iteration smoke
  substitute runs by default.

Each test prints one PASS/FAIL line through an autouse reporter.
"""

import copy
import math
import os

import numpy as np
import pytest

from tsgait import contact as con
from tsgait import env as envmod
from tsgait import evalrun, exploration, ppo, refgen, reward, tsid
from tsgait import model as mod
from tsgait.ppo import nets
from conftest import PENDULUM, random_state, zero_gravity
from fixtures import PointMassEnv

SLOW = os.environ.get("TSGAIT_SLOW", "") == "1"
FULL = os.environ.get("TSGAIT_FULL", "") == "1"


# ---------------------------------------------------------------------------
# Criterion 1: kinematics/dynamics oracle suite
# ---------------------------------------------------------------------------

def _chart(state, z, nj):
    return mod.GeneralizedState(
        base_position=state.base_position + z[0:3],
        base_orientation=mod.quat_mul(state.base_orientation,
                                      mod.quat_from_rotvec(z[3:6])),
        joint_angles=state.joint_angles + z[6:6 + nj],
        base_lin_vel=state.base_lin_vel,
        base_ang_vel=state.base_ang_vel,
        joint_rates=state.joint_rates)


def test_kinematics_dynamics_oracles(biped, rng):
    # foot Jacobian vs central finite differences, 100 random states
    h, worst = 1e-6, 0.0
    for _ in range(100):
        state = random_state(biped, rng)
        v = rng.normal(size=biped.nv)
        for foot in (mod.LEFT, mod.RIGHT):
            jac = mod.foot_jacobian(biped, state, foot)
            plus = mod.forward_kinematics(biped, _chart(state, h * v, 10))
            minus = mod.forward_kinematics(biped, _chart(state, -h * v, 10))
            fd = (plus.foot_rel[foot] - minus.foot_rel[foot]) / (2 * h)
            worst = max(worst, np.linalg.norm(fd - jac @ v)
                        / max(np.linalg.norm(jac @ v), 1e-9))
    assert worst < 1e-6

    # CRBA vs RNEA columns, 100 random states, < 1e-9 absolute; M SPD
    nog = zero_gravity(biped)
    worst_col = 0.0
    for _ in range(100):
        state = random_state(nog, rng, vel_scale=0.0)
        mat = mod.mass_matrix(nog, state)
        assert np.max(np.abs(mat - mat.T)) < 1e-10
        assert np.linalg.eigvalsh(mat)[0] > 0.0
        for j in range(nog.nv):
            e = np.zeros(nog.nv)
            e[j] = 1.0
            col = mod.inverse_dynamics(nog, state, e)
            worst_col = max(worst_col, float(np.max(np.abs(mat[:, j] - col))))
    assert worst_col < 1e-9

    # contact-free passive energy drift < 2% over 1 s at dt = 5e-4
    pend = mod.loads_model(PENDULUM, require_biped=False)
    state = mod.default_state(pend, base_height=5.0)
    state.joint_rates = np.array([2.0, -1.5])
    state.base_ang_vel = np.array([0.3, 0.4, -0.2])
    e0 = mod.kinetic_energy(pend, state) + mod.potential_energy(pend, state)
    for _ in range(2000):
        state = con.step_physics(pend, state, np.zeros(0),
                                 con.ContactParams(), 5e-4)
    e1 = mod.kinetic_energy(pend, state) + mod.potential_energy(pend, state)
    assert abs(e1 - e0) / abs(e0) < 0.02


# ---------------------------------------------------------------------------
# Criterion 2: controller correctness
# ---------------------------------------------------------------------------

def test_controller_correctness(biped, rng):
    crouch = np.array([0.0, 0.05, -0.45, 0.8, -0.65,
                       0.0, -0.05, -0.5, 0.9, -0.65])
    state = mod.default_state(biped, base_height=0.95, joint_angles=crouch)
    fk = mod.forward_kinematics(biped, state)
    gains = tsid.TaskGains()
    params = refgen.GaitParams()
    ref = refgen.sample(params, 0.0, 0.3)
    idx = biped.actuated_angle_index
    ref.theta_ref = np.array([state.joint_angles[idx[i]]
                              for i in tsid.ORIENT_INDICES])

    # swing: applied torque reproduces the commanded acceleration < 1e-6 rel
    offset = np.array([0.03, -0.02, 0.04])
    ref.x_ref_left = fk.foot_rel[mod.LEFT] + offset
    ref.x_ref_right = fk.foot_rel[mod.RIGHT] + offset
    ref.f_ref_left = np.zeros(3)
    ref.f_ref_right = np.zeros(3)
    command = tsid.hold_command(ref)
    for foot in (mod.LEFT, mod.RIGHT):
        tau, singular = tsid.swing_torque(biped, state, command, foot, gains)
        assert not singular
        xdd_des = gains.kp_swing * offset
        full = np.zeros(biped.nv)
        full[biped.actuated_qvel] = tau
        qacc = np.linalg.solve(mod.mass_matrix(biped, state),
                               full - mod.gravity_vector(biped, state))
        realized = mod.foot_jacobian(biped, state, foot) @ qacc
        assert np.linalg.norm(realized - xdd_des) / np.linalg.norm(xdd_des) \
            < 1e-6

    # stance at setpoint: exactly the Jacobian transpose of the feedforward
    f_ref = np.array([5.0, -2.0, 160.0])
    ref.x_ref_left = fk.foot_rel[mod.LEFT].copy()
    ref.x_ref_right = fk.foot_rel[mod.RIGHT].copy()
    ref.f_ref_left = f_ref.copy()
    ref.f_ref_right = f_ref.copy()
    for foot in (mod.LEFT, mod.RIGHT):
        tau = tsid.stance_torque(biped, state, command, foot, gains)
        jac = mod.foot_jacobian(biped, state, foot)
        expected = (jac.T @ (tsid.GRF_TO_APPLIED * f_ref))[biped.actuated_qvel]
        np.testing.assert_allclose(tau, expected, atol=1e-12)

    # blend endpoints exact
    a, b = rng.normal(size=10), rng.normal(size=10)
    assert np.array_equal(tsid.blend(a, b, 1.0), a)
    assert np.array_equal(tsid.blend(a, b, 0.0), b)

    # worked gain examples: 4 N for 1 cm at 400 N/m; 10 Nm for 0.1 rad
    shifted = tsid.ControlCommand(np.full(3, 0.01), np.full(3, 0.01),
                                  np.zeros(4), ref)
    force = tsid.stance_force(biped, state, shifted, mod.LEFT, gains)
    impedance = force - tsid.GRF_TO_APPLIED * f_ref
    assert impedance[2] == pytest.approx(4.0, abs=1e-9)
    yaw_err = tsid.ControlCommand(np.zeros(3), np.zeros(3),
                                  np.array([0.1, 0.0, 0.0, 0.0]), ref)
    tau = tsid.orientation_torque(biped, state, yaw_err, gains)
    assert tau[0] == pytest.approx(10.0, abs=1e-9)


# ---------------------------------------------------------------------------
# Criterion 3: reward contract
# ---------------------------------------------------------------------------

def test_reward_contract(rng):
    assert math.fsum(reward.DEFAULT_WEIGHTS) == 1.0
    for _ in range(200):
        fbar = rng.uniform(0.0, 6.0, reward.N_TERMS)
        b = reward.breakdown_from_costs(fbar)
        assert np.all((b.terms > 0.0) & (b.terms <= 1.0))
        assert 0.0 < b.total <= 1.0
    perfect = reward.breakdown_from_costs(np.zeros(reward.N_TERMS))
    assert abs(perfect.total - 1.0) <= 1e-12
    # per-foot blend exact at the endpoints
    assert reward.foot_cost(0.02, 0.3, 1.0, 0.15) == \
        pytest.approx(0.02 ** 2 + 0.3)
    assert reward.foot_cost(0.15, 0.3, 0.0, 0.15) == 0.0


# ---------------------------------------------------------------------------
# Criterion 4: PPO numerics
# ---------------------------------------------------------------------------

def test_ppo_numerics(rng):
    policy = ppo.make_policy(4, 2, 8, -1.0, rng, final_scale=0.5)
    obs = rng.normal(size=(16, 4))
    mean = nets.forward(policy.actor, obs)
    raw = mean + policy.sigma * rng.standard_normal(mean.shape)
    old = ppo.log_prob(raw, mean, policy.sigma) + rng.normal(scale=0.05,
                                                             size=16)
    adv = rng.normal(size=16)
    _, grads, diag = ppo.actor_loss_and_grad(policy, obs, raw, old, adv, 0.2)
    h, checked = 1e-6, 0
    for arr, grad in zip(policy.actor.arrays(), grads):
        for _ in range(8):
            idx = tuple(rng.integers(0, s) for s in arr.shape)
            keep = arr[idx]
            arr[idx] = keep + h
            up, _, _ = ppo.actor_loss_and_grad(policy, obs, raw, old, adv,
                                               0.2)
            arr[idx] = keep - h
            down, _, _ = ppo.actor_loss_and_grad(policy, obs, raw, old, adv,
                                                 0.2)
            arr[idx] = keep
            fd = (up - down) / (2 * h)
            if abs(fd) > 1e-7:
                assert fd == pytest.approx(grad[idx], rel=1e-4)
                checked += 1
    assert checked >= 10

    # post-clip global norm <= 0.05
    big = [rng.normal(size=(64, 64)), rng.normal(size=64)]
    nets.clip_by_global_norm(big, 0.05)
    assert nets.global_norm(big) <= 0.05 + 1e-12

    # replayed batch: ratio identically one
    logp = ppo.log_prob(raw, mean, policy.sigma)
    _, _, diag = ppo.actor_loss_and_grad(policy, obs, raw, logp,
                                         rng.normal(size=16), 0.2)
    assert diag["clip_fraction"] == 0.0
    assert diag["approx_kl"] == pytest.approx(0.0, abs=1e-12)


def test_ppo_solves_point_mass_fixture():
    # mean per-step reward > 0.9 within 50 iterations (< 2 min)
    config = ppo.PpoConfig(iterations=50, samples_per_iteration=5000,
                           minibatch=1024, epochs=8, hidden=64,
                           adam_stepsize=3e-3, max_grad_norm=0.5,
                           log_sigma_task=-2.0)
    best = 0.0

    def track(row):
        nonlocal best
        best = max(best, row["mean_ep_reward"] / row["mean_ep_len"])

    ppo.train(PointMassEnv, "task", config, seed=7, on_iteration=track)
    assert best > 0.9


# ---------------------------------------------------------------------------
# Criterion 5: exploration study (Fig. 5 semantics, property form)
# ---------------------------------------------------------------------------

def test_exploration_coverage_ordering():
    n = 50000 if SLOW else 6000
    seeds = (1, 2, 3)
    hulls = {"task": [], "joint": []}
    occ = {-1.5: [], -1.0: []}
    for seed in seeds:
        for space, log_sigma in (("task", -2.5), ("joint", -1.5),
                                 ("joint", -1.0)):
            cfg = exploration.NoiseStudyConfig(
                mode=exploration.EPISODE, action_space=space,
                log_sigma=log_sigma, n_samples=n, seed=seed)
            report, _ = exploration.run_noise_study(cfg)
            if log_sigma in (-2.5, -1.5):
                hulls[space].append(report.hull_area_xz)
            if space == "joint":
                occ[log_sigma].append(report.occupancy_cells)
    task_med = float(np.median(hulls["task"]))
    joint_med = float(np.median(hulls["joint"]))
    print(f"\n[exploration] median hull xz: task {task_med:.4f} "
          f"joint {joint_med:.4f} (n={n})")
    assert task_med > joint_med
    ratio = float(np.median(occ[-1.0])) / float(np.median(occ[-1.5]))
    print(f"[exploration] joint occupancy ratio (-1.0 / -1.5): {ratio:.3f}")
    assert ratio <= 1.25


# ---------------------------------------------------------------------------
# Criterion 6: sample-efficiency comparison (desk-scale substitute)
# ---------------------------------------------------------------------------

def _train_curve(action_space, iterations, seed):
    import functools

    factory = functools.partial(envmod.make_env, action_mode=action_space,
                                seed=seed, speed=0.5)
    config = ppo.PpoConfig(iterations=iterations, workers=1)
    _, _, history = ppo.train(factory, action_space, config, seed=seed)
    return [row["mean_ep_reward"] for row in history]


def test_sample_efficiency_smoke():
    """30-iteration smoke: task-space mean reward rises >= 50% over start."""
    curve = _train_curve(envmod.TASK, 30, seed=1)
    start = np.mean(curve[:3])
    best = max(np.mean(curve[i:i + 3]) for i in range(len(curve) - 2))
    print(f"\n[smoke] start {start:.2f} best-3-window {best:.2f} "
          f"({100 * (best / start - 1):+.1f}%)")
    assert best >= 1.5 * start


@pytest.mark.slow
@pytest.mark.skipif(not FULL, reason="full protocol needs TSGAIT_FULL=1 "
                    "(300 iterations x 5 seeds x 2 action spaces; hours)")
def test_sample_efficiency_full():
    seeds = [1, 2, 3, 4, 5]
    wins = 0
    for seed in seeds:
        task = _train_curve(envmod.TASK, 300, seed)
        joint = _train_curve(envmod.JOINT, 300, seed)
        beyond = range(100, 300, 10)
        if all(task[i] > joint[i] for i in beyond):
            wins += 1
    assert wins >= 4


# ---------------------------------------------------------------------------
# Criterion 7: evaluation-harness correctness (Fig. 3 machinery)
# ---------------------------------------------------------------------------

def test_eval_harness_oracles():
    # scripted constant-velocity fixture: reported speed is exact
    records = []
    speed, rate = 0.67, 40.0
    for i in range(400):
        t = (i + 1) / rate
        records.append(evalrun.StepRecord(
            time=t, base_x=speed * t, base_vx=speed, grf=np.zeros((2, 3)),
            phi=np.array([1.0, 0.0]), stance_phase=(0.4, None), fell=False))
    mean, std, falls, steps = evalrun.achieved_speed(records, 2.0, 8.0)
    assert mean == pytest.approx(speed, abs=1e-12)
    assert falls == 0

    # hand-binned GRF fixture
    recs = []
    for s, fz in ((0.05, 100.0), (0.05, 300.0), (0.55, 500.0)):
        grf = np.zeros((2, 3))
        grf[1] = [7.0, 0.0, fz]
        recs.append(evalrun.StepRecord(
            time=0.0, base_x=0.0, base_vx=0.0, grf=grf,
            phi=np.array([0.0, 1.0]), stance_phase=(None, s), fell=False))
    rows = evalrun.bin_grf(recs, n_bins=10)
    assert rows[0] == (0.05, pytest.approx(200.0), pytest.approx(7.0), 2)
    assert rows[5] == (0.55, pytest.approx(500.0), pytest.approx(7.0), 1)

    # refdump impulse balance within 1%
    params = refgen.GaitParams()
    rows = refgen.dump_cycle(params, 0.5, rate=2000)
    impulse = sum(r[6] + r[13] for r in rows) / 2000.0
    expected = params.total_mass * refgen.GRAVITY * params.cycle_period
    assert abs(impulse - expected) / expected < 0.01


# ---------------------------------------------------------------------------
# Criterion 8: determinism
# ---------------------------------------------------------------------------

def test_determinism_byte_identical(tmp_path):
    from tsgait import cli

    cfg = tmp_path / "c.toml"
    cfg.write_text("""
[ppo]
iterations = 2
samples_per_iteration = 150
minibatch = 64
epochs = 2
hidden = 16

[env]
horizon = 25

[experiment]
explore_samples = 40
explore_seeds = [5]
""")
    outs = []
    for sub in ("r1", "r2"):
        out = tmp_path / sub
        assert cli.main(["train", "--config", str(cfg), "--output",
                         str(out), "--action-space", "task",
                         "--seeds", "3"]) == 0
        assert cli.main(["explore", "--config", str(cfg), "--output",
                         str(out / "explore")]) == 0
        outs.append(out)
    # training log: identical except the wall-clock column
    logs = []
    for out in outs:
        text = (out / "task_seed3" / "training_log.csv").read_text()
        logs.append([",".join(line.split(",")[:-1])
                     for line in text.splitlines()])
    assert logs[0] == logs[1]
    # learning curve and exploration CSVs: byte-identical
    a = (outs[0] / "learning_curve_task.csv").read_bytes()
    b = (outs[1] / "learning_curve_task.csv").read_bytes()
    assert a == b
    for name in sorted(os.listdir(outs[0] / "explore")):
        if name.endswith(".csv"):
            assert (outs[0] / "explore" / name).read_bytes() == \
                (outs[1] / "explore" / name).read_bytes()
