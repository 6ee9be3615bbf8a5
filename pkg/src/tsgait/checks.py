"""Fast invariant suite behind `tsgait check` (and reused by tests).

Each check returns (name, passed, detail).  The suite covers the
kinematics/dynamics oracles, controller endpoint identities, reward
contract, reference-generator properties, and backend agreement, at reduced
sample counts so the whole run takes seconds.
"""

from __future__ import annotations

import numpy as np

from . import backend as bk
from . import contact as con
from . import env as envmod
from . import model as mod
from . import refgen, reward, tsid


def _random_state(model, rng, vel=1.0):
    quat = rng.normal(size=4)
    quat /= np.linalg.norm(quat)
    return mod.GeneralizedState(
        base_position=rng.uniform(-1, 1, 3),
        base_orientation=mod.canonical_quat(quat),
        joint_angles=rng.uniform(-0.8, 0.8, model.nj),
        base_lin_vel=vel * rng.uniform(-1, 1, 3),
        base_ang_vel=vel * rng.uniform(-1, 1, 3),
        joint_rates=vel * rng.uniform(-2, 2, model.nj),
    )


def _perturb(state, z, nj):
    return mod.GeneralizedState(
        base_position=state.base_position + z[0:3],
        base_orientation=mod.quat_mul(state.base_orientation,
                                      mod.quat_from_rotvec(z[3:6])),
        joint_angles=state.joint_angles + z[6:6 + nj],
        base_lin_vel=state.base_lin_vel,
        base_ang_vel=state.base_ang_vel,
        joint_rates=state.joint_rates,
    )


def check_jacobian_fd(model, rng, n=10):
    h = 1e-6
    worst = 0.0
    for _ in range(n):
        state = _random_state(model, rng)
        v = rng.normal(size=model.nv)
        for foot in (mod.LEFT, mod.RIGHT):
            jac = mod.foot_jacobian(model, state, foot)
            plus = mod.forward_kinematics(model, _perturb(state, h * v,
                                                          model.nj))
            minus = mod.forward_kinematics(model, _perturb(state, -h * v,
                                                           model.nj))
            fd = (plus.foot_rel[foot] - minus.foot_rel[foot]) / (2 * h)
            err = np.linalg.norm(fd - jac @ v) / max(
                np.linalg.norm(jac @ v), 1e-9)
            worst = max(worst, err)
    return "model: foot Jacobian vs finite-difference FK", worst < 1e-6, \
        f"max rel err {worst:.2e}"


def check_crba_rnea(model, rng, n=10):
    import copy

    nog = copy.copy(model)
    nog.gravity = np.zeros(3)
    worst = 0.0
    for _ in range(n):
        state = _random_state(nog, rng, vel=0.0)
        mat = mod.mass_matrix(nog, state)
        for j in range(nog.nv):
            accel = np.zeros(nog.nv)
            accel[j] = 1.0
            col = mod.inverse_dynamics(nog, state, accel)
            worst = max(worst, float(np.max(np.abs(mat[:, j] - col))))
    return "model: CRBA columns vs RNEA oracle", worst < 1e-9, \
        f"max abs err {worst:.2e}"


def check_mass_matrix_spd(model, rng, n=10):
    worst_asym, min_eig = 0.0, np.inf
    for _ in range(n):
        state = _random_state(model, rng)
        mat = mod.mass_matrix(model, state)
        worst_asym = max(worst_asym, float(np.max(np.abs(mat - mat.T))))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(mat)[0]))
    passed = worst_asym < 1e-10 and min_eig > 0.0
    return "model: mass matrix symmetric positive definite", passed, \
        f"asym {worst_asym:.2e}, min eig {min_eig:.2e}"


PENDULUM_TEXT = """
format_version 1
name check_pendulum
body base
  joint floating
  mass 3.0
  com 0 0 0
  inertia 0.02 0.02 0.02
body link1
  parent base
  joint revolute
  axis 0 1 0
  origin 0.1 0 -0.05
  mass 1.2
  com 0 0 -0.15
  inertia 0.012 0.012 0.001
body link2
  parent link1
  joint revolute
  axis 1 0 0
  origin 0 0 -0.30
  mass 0.8
  com 0 0 -0.12
  inertia 0.008 0.008 0.0008
"""


def check_passive_energy(_model, _rng):
    pend = mod.loads_model(PENDULUM_TEXT, require_biped=False)
    state = mod.default_state(pend, base_height=5.0)
    state.joint_rates = np.array([2.0, -1.5])
    state.base_ang_vel = np.array([0.3, 0.4, -0.2])
    e0 = mod.kinetic_energy(pend, state) + mod.potential_energy(pend, state)
    params = con.ContactParams()
    for _ in range(2000):
        state = con.step_physics(pend, state, np.zeros(0), params, 5e-4)
    e1 = mod.kinetic_energy(pend, state) + mod.potential_energy(pend, state)
    drift = abs(e1 - e0) / abs(e0)
    return "env: passive energy drift < 2% over 1 s", drift < 0.02, \
        f"drift {drift:.2e}"


def check_controller_endpoints(model, rng):
    crouch = np.array([0.0, 0.05, -0.45, 0.8, -0.65,
                       0.0, -0.05, -0.5, 0.9, -0.65])
    state = mod.default_state(model, base_height=0.95, joint_angles=crouch)
    fk = mod.forward_kinematics(model, state)
    params = refgen.GaitParams()
    ref = refgen.sample(params, 0.0, 0.3)
    ref.x_ref_left = fk.foot_rel[mod.LEFT].copy()
    ref.x_ref_right = fk.foot_rel[mod.RIGHT].copy()
    f_ref = np.array([4.0, -2.0, 150.0])
    ref.f_ref_left = f_ref.copy()
    ref.f_ref_right = f_ref.copy()
    ref.phi_left = ref.phi_right = 1.0
    idx = model.actuated_angle_index
    ref.theta_ref = np.array([state.joint_angles[idx[i]]
                              for i in tsid.ORIENT_INDICES])
    command = tsid.hold_command(ref)
    gains = tsid.TaskGains()
    ok = True
    details = []
    for foot in (mod.LEFT, mod.RIGHT):
        tau = tsid.stance_torque(model, state, command, foot, gains)
        jac = mod.foot_jacobian(model, state, foot)
        expected = (jac.T @ (tsid.GRF_TO_APPLIED * f_ref))[model.actuated_qvel]
        err = float(np.max(np.abs(tau - expected)))
        ok = ok and err < 1e-10
        details.append(f"stance@setpoint err {err:.1e}")
    a, b = rng.normal(size=10), rng.normal(size=10)
    ok = ok and np.array_equal(tsid.blend(a, b, 1.0), a)
    ok = ok and np.array_equal(tsid.blend(a, b, 0.0), b)
    force = tsid.stance_force(
        model, state,
        tsid.ControlCommand(np.array([0.01, 0.01, 0.01]),
                            np.array([0.01, 0.01, 0.01]),
                            np.zeros(4), command.reference),
        mod.LEFT, gains)
    gain_example = force - tsid.GRF_TO_APPLIED * f_ref
    ok = ok and abs(gain_example[2] - 4.0) < 1e-9 \
        and abs(gain_example[0] - 3.0) < 1e-9
    details.append(f"1 cm -> {gain_example[2]:.2f} N vertical")
    return "tsid: endpoint identities and worked gains", ok, "; ".join(details)


def check_swing_tracking(model, _rng):
    crouch = np.array([0.0, 0.05, -0.45, 0.8, -0.65,
                       0.0, -0.05, -0.5, 0.9, -0.65])
    state = mod.default_state(model, base_height=0.95, joint_angles=crouch)
    fk = mod.forward_kinematics(model, state)
    params = refgen.GaitParams()
    ref = refgen.sample(params, 0.0, 0.3)
    offset = np.array([0.03, -0.02, 0.04])
    ref.x_ref_left = fk.foot_rel[mod.LEFT] + offset
    ref.x_ref_right = fk.foot_rel[mod.RIGHT] + offset
    ref.f_ref_left = np.zeros(3)
    ref.f_ref_right = np.zeros(3)
    idx = model.actuated_angle_index
    ref.theta_ref = np.array([state.joint_angles[idx[i]]
                              for i in tsid.ORIENT_INDICES])
    command = tsid.hold_command(ref)
    gains = tsid.TaskGains()
    worst = 0.0
    for foot in (mod.LEFT, mod.RIGHT):
        tau, singular = tsid.swing_torque(model, state, command, foot, gains)
        if singular:
            return "tsid: swing reproduces commanded acceleration", False, \
                "unexpected singularity"
        xdd_des = gains.kp_swing * offset
        full = np.zeros(model.nv)
        full[model.actuated_qvel] = tau
        qacc = np.linalg.solve(mod.mass_matrix(model, state),
                               full - mod.gravity_vector(model, state))
        jac = mod.foot_jacobian(model, state, foot)
        err = np.linalg.norm(jac @ qacc - xdd_des) / np.linalg.norm(xdd_des)
        worst = max(worst, float(err))
    return "tsid: swing reproduces commanded acceleration", worst < 1e-6, \
        f"max rel err {worst:.2e}"


def check_reward_contract(_model, rng):
    import math

    ok = math.fsum(reward.DEFAULT_WEIGHTS) == 1.0
    fbar = rng.uniform(0, 4, reward.N_TERMS)
    b = reward.breakdown_from_costs(fbar)
    ok = ok and np.all((b.terms > 0) & (b.terms <= 1.0)) and 0 < b.total <= 1
    perfect = reward.breakdown_from_costs(np.zeros(reward.N_TERMS))
    ok = ok and abs(perfect.total - 1.0) < 1e-12
    return "reward: weights, kernel bounds, perfect tracking", ok, \
        f"perfect total {perfect.total!r}"


def check_reference_properties(_model, _rng):
    params = refgen.GaitParams()
    ok = True
    for phase in np.linspace(0, 1, 500):
        total = (refgen.transition_weight(params, phase, mod.LEFT)
                 + refgen.transition_weight(params, phase, mod.RIGHT))
        ok = ok and 1.0 - 1e-12 <= total <= 2.0
        ref = refgen.sample(params, 0.5, phase)
        ok = ok and ref.f_ref_left[2] >= 0 and ref.f_ref_right[2] >= 0
        if ref.phi_left == 0.0:
            ok = ok and np.all(ref.f_ref_left == 0.0)
    total = 0.0
    n = int(params.cycle_period * 2000)
    for i in range(n):
        ref = refgen.sample(params, 0.5, i / n)
        total += (ref.f_ref_left[2] + ref.f_ref_right[2]) / 2000
    expected = params.total_mass * refgen.GRAVITY * params.cycle_period
    impulse_ok = abs(total - expected) / expected < 0.01
    return "refgen: weights, force gating, impulse balance", \
        ok and impulse_ok, f"impulse err {abs(total-expected)/expected:.3%}"


def check_backend_agreement(_model, _rng):
    if not bk.compiled_available():
        return "backend: compiled core agreement", True, \
            "compiled core not built; python fallback in use"
    envs = [envmod.make_env(backend=name, seed=3,
                            init_velocity_perturbation=0.2)
            for name in ("python", "compiled")]
    for env in envs:
        env.reset(seed=11)
    action = np.full(10, 0.2)
    cmds = [env._window_command(action)[0] for env in envs]
    results = [env.kernel.run_window(env._qpos, env._qvel,
                                     env._prev_base_vel, cmd, 5e-4, 50, 0.6)
               for env, cmd in zip(envs, cmds)]
    err = float(np.max(np.abs(results[0]["qpos"] - results[1]["qpos"])))
    return "backend: compiled core agreement", err < 1e-7, \
        f"qpos max diff {err:.2e}"


CHECKS = [
    check_jacobian_fd,
    check_crba_rnea,
    check_mass_matrix_spd,
    check_passive_energy,
    check_controller_endpoints,
    check_swing_tracking,
    check_reward_contract,
    check_reference_properties,
    check_backend_agreement,
]


def run_all(model=None, seed=2024):
    if model is None:
        model = mod.load_builtin()
    rng = np.random.default_rng(seed)
    results = []
    for check in CHECKS:
        try:
            results.append(check(model, rng))
        except Exception as exc:  # a crashed check is a failed check
            results.append((check.__name__, False, f"exception: {exc!r}"))
    return results
