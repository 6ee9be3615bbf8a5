"""PPO numerics: finite-difference gradient oracles, clip semantics,
GAE fixtures, determinism, and the solvable point-mass task."""

import numpy as np
import pytest

from tsgait import ppo
from tsgait.ppo import nets
from fixtures import PointMassEnv

OBS, ACT, HID = 4, 2, 8


@pytest.fixture
def toy_policy(rng):
    return ppo.make_policy(OBS, ACT, HID, log_sigma=-1.0,
                           rng=rng, final_scale=0.5)


@pytest.fixture
def toy_critic(rng):
    return ppo.make_critic(OBS, HID, rng)


# ---------------------------------------------------------------------------
# Networks
# ---------------------------------------------------------------------------

def test_zero_net_outputs_zero():
    net = nets.MlpParams(w1=np.zeros((8, 4)), b1=np.zeros(8),
                         w2=np.zeros((2, 8)), b2=np.zeros(2))
    assert np.all(nets.forward(net, np.ones(4)) == 0.0)


def test_hand_computed_toy_forward():
    net = nets.MlpParams(w1=np.array([[2.0], [-1.0]]),
                         b1=np.array([0.5, 0.25]),
                         w2=np.array([[1.5, -0.5]]), b2=np.array([0.1]))
    x = np.array([0.3])
    # pre1 = (1.1, -0.05) -> relu (1.1, 0); pre2 = 1.65 + 0.1 = 1.75
    assert nets.forward(net, x)[0] == pytest.approx(np.tanh(1.75))
    net.output = nets.LINEAR
    assert nets.forward(net, x)[0] == pytest.approx(1.75)


def _fd_check(net, x, gout, rng, rel_tol=1e-6):
    grads, gx = nets.backward(net, x, gout)
    arrays = net.arrays()

    def loss():
        return float(np.sum(nets.forward(net, x) * gout))

    h = 1e-6
    for arr, grad in zip(arrays, grads):
        for _ in range(5):
            idx = tuple(rng.integers(0, s) for s in arr.shape)
            old = arr[idx]
            arr[idx] = old + h
            up = loss()
            arr[idx] = old - h
            down = loss()
            arr[idx] = old
            fd = (up - down) / (2 * h)
            assert fd == pytest.approx(grad[idx], rel=rel_tol, abs=1e-9)
    # input gradient
    for _ in range(5):
        i = rng.integers(0, x.shape[-1])
        xp, xm = x.copy(), x.copy()
        xp[..., i] += h
        xm[..., i] -= h
        fd = (np.sum(nets.forward(net, xp) * gout)
              - np.sum(nets.forward(net, xm) * gout)) / (2 * h)
        assert fd == pytest.approx(np.sum(gx[..., i]), rel=1e-5, abs=1e-9)


def test_backward_matches_finite_differences(rng):
    for output in (nets.TANH, nets.LINEAR):
        net = nets.init_mlp(OBS, HID, ACT, output, rng)
        x = rng.normal(size=(6, OBS))
        gout = rng.normal(size=(6, ACT))
        _fd_check(net, x, gout, rng)


def test_global_norm_clip():
    grads = [np.full((3, 3), 10.0), np.full(3, -4.0)]
    nets.clip_by_global_norm(grads, 0.05)
    assert nets.global_norm(grads) <= 0.05 + 1e-12
    small = [np.full(2, 1e-4)]
    nets.clip_by_global_norm(small, 0.05)
    np.testing.assert_array_equal(small[0], np.full(2, 1e-4))


# ---------------------------------------------------------------------------
# Policy sampling
# ---------------------------------------------------------------------------

def test_sigma_value(toy_policy):
    assert ppo.make_policy(OBS, ACT, HID, -2.5,
                           np.random.default_rng(0)).sigma == \
        pytest.approx(np.exp(-2.5))


class _ZeroRng:
    def standard_normal(self, shape):
        return np.zeros(shape)


def test_zero_noise_sample_is_mean(toy_policy):
    obs = np.linspace(-1, 1, OBS)
    action, logp, raw = ppo.sample_action(toy_policy, obs, _ZeroRng())
    mean = toy_policy.mean(obs)
    np.testing.assert_array_equal(raw, mean)
    np.testing.assert_array_equal(action, np.clip(mean, -1, 1))
    expected = -ACT * (np.log(toy_policy.sigma) + 0.5 * np.log(2 * np.pi))
    assert logp == pytest.approx(expected)


def test_sample_stddev_monte_carlo(toy_policy, rng):
    obs = np.zeros(OBS)
    mean = toy_policy.mean(obs)
    n = 1_000_000
    raws = mean + toy_policy.sigma * rng.standard_normal((n, ACT))
    std = raws.std(axis=0)
    np.testing.assert_allclose(std, toy_policy.sigma, rtol=0.01)


# ---------------------------------------------------------------------------
# GAE
# ---------------------------------------------------------------------------

def test_gae_lambda_one_is_discounted_return_minus_value():
    rewards = np.array([1.0, 0.5, 2.0, -1.0])
    values = np.array([0.3, -0.2, 0.9, 0.1])
    gamma = 0.9
    adv = ppo.episode_gae(rewards, values, 0.0, gamma, 1.0)
    for t in range(4):
        ret = sum(gamma ** (k - t) * rewards[k] for k in range(t, 4))
        assert adv[t] == pytest.approx(ret - values[t])


def test_gae_lambda_zero_is_td_residual():
    rewards = np.array([1.0, 0.5, 2.0])
    values = np.array([0.3, -0.2, 0.9])
    gamma, boot = 0.95, 0.7
    adv = ppo.episode_gae(rewards, values, boot, gamma, 0.0)
    next_values = np.array([-0.2, 0.9, boot])
    np.testing.assert_allclose(adv, rewards + gamma * next_values - values,
                               atol=1e-12)


def test_gae_hand_unrolled_three_step_fixture():
    # frozen pencil-and-paper recursion: gamma=0.9, lam=0.5, bootstrap 0.25
    rewards = np.array([1.0, -0.5, 2.0])
    values = np.array([0.2, 0.4, -0.1])
    gamma, lam, boot = 0.9, 0.5, 0.25
    d2 = 2.0 + 0.9 * 0.25 - (-0.1)          # 2.325
    d1 = -0.5 + 0.9 * (-0.1) - 0.4          # -0.99
    d0 = 1.0 + 0.9 * 0.4 - 0.2              # 1.16
    a2 = d2
    a1 = d1 + 0.45 * a2                     # -0.99 + 1.04625
    a0 = d0 + 0.45 * a1
    adv = ppo.episode_gae(rewards, values, boot, gamma, lam)
    np.testing.assert_allclose(adv, [a0, a1, a2], atol=1e-12)
    assert a2 == pytest.approx(2.325)
    assert a1 == pytest.approx(0.05625)
    assert a0 == pytest.approx(1.1853125)


def test_batch_gae_bootstraps_on_timeout_only():
    batch = ppo.RolloutBatch(
        obs=np.zeros((4, 2)), actions=np.zeros((4, 1)),
        raw_actions=np.zeros((4, 1)), log_probs=np.zeros(4),
        rewards=np.array([1.0, 1.0, 1.0, 1.0]),
        values=np.array([0.0, 0.0, 0.0, 0.0]),
        dones=np.array([False, True, False, True]),
        episodes=[ppo.Episode(0, 2, "timeout", bootstrap_value=10.0),
                  ppo.Episode(2, 4, "failure", bootstrap_value=99.0)])
    adv, targets = ppo.gae(batch, gamma=1.0, lam=1.0, normalize=False)
    # timeout episode sees the bootstrap; failure episode does not
    assert adv[0] == pytest.approx(2.0 + 10.0)
    assert adv[2] == pytest.approx(2.0)


def test_advantage_normalization_stats(rng):
    n = 500
    batch = ppo.RolloutBatch(
        obs=np.zeros((n, 2)), actions=np.zeros((n, 1)),
        raw_actions=np.zeros((n, 1)), log_probs=np.zeros(n),
        rewards=rng.normal(size=n), values=rng.normal(size=n),
        dones=np.zeros(n, dtype=bool),
        episodes=[ppo.Episode(0, n, "failure", 0.0)])
    batch.dones[-1] = True
    adv, _ = ppo.gae(batch, 0.99, 0.95, normalize=True)
    assert abs(adv.mean()) < 1e-10
    assert abs(adv.var() - 1.0) < 1e-6


# ---------------------------------------------------------------------------
# PPO update
# ---------------------------------------------------------------------------

def test_clip_objective_unit_case(toy_policy):
    obs = np.zeros((1, OBS))
    mean = toy_policy.mean(obs)
    raw = mean + 0.1
    logp = ppo.log_prob(raw, mean, toy_policy.sigma)
    old = logp - np.log(1.5)     # ratio = 1.5
    loss, grads, diag = ppo.actor_loss_and_grad(
        toy_policy, obs, raw, old, np.array([1.0]), clip_epsilon=0.2)
    assert loss == pytest.approx(-1.2)         # min(1.5, 1.2) * 1
    assert diag["clip_fraction"] == 1.0
    # clipped branch is active: no gradient flows
    assert nets.global_norm(grads) == pytest.approx(0.0, abs=1e-15)


def test_replayed_batch_has_unit_ratio(toy_policy, rng):
    obs = rng.normal(size=(32, OBS))
    mean = nets.forward(toy_policy.actor, obs)
    raw = mean + toy_policy.sigma * rng.standard_normal(mean.shape)
    logp = ppo.log_prob(raw, mean, toy_policy.sigma)
    loss, grads, diag = ppo.actor_loss_and_grad(
        toy_policy, obs, raw, logp, rng.normal(size=32), 0.2)
    assert diag["clip_fraction"] == 0.0
    assert diag["approx_kl"] == pytest.approx(0.0, abs=1e-12)


def test_actor_loss_gradient_matches_fd(toy_policy, rng):
    obs = rng.normal(size=(16, OBS))
    mean = nets.forward(toy_policy.actor, obs)
    raw = mean + toy_policy.sigma * rng.standard_normal(mean.shape)
    old = ppo.log_prob(raw, mean, toy_policy.sigma) + rng.normal(
        scale=0.05, size=16)
    adv = rng.normal(size=16)

    def loss():
        val, _, _ = ppo.actor_loss_and_grad(toy_policy, obs, raw, old, adv,
                                            0.2)
        return val

    _, grads, _ = ppo.actor_loss_and_grad(toy_policy, obs, raw, old, adv, 0.2)
    h = 1e-6
    checked = 0
    for arr, grad in zip(toy_policy.actor.arrays(), grads):
        for _ in range(6):
            idx = tuple(rng.integers(0, s) for s in arr.shape)
            old_val = arr[idx]
            arr[idx] = old_val + h
            up = loss()
            arr[idx] = old_val - h
            down = loss()
            arr[idx] = old_val
            fd = (up - down) / (2 * h)
            if abs(fd) > 1e-8:
                assert fd == pytest.approx(grad[idx], rel=1e-4)
                checked += 1
    assert checked >= 10


def test_critic_loss_gradient_matches_fd(toy_critic, rng):
    obs = rng.normal(size=(16, OBS))
    targets = rng.normal(size=16)

    def loss():
        val, _ = ppo.critic_loss_and_grad(toy_critic, obs, targets)
        return val

    _, grads = ppo.critic_loss_and_grad(toy_critic, obs, targets)
    h = 1e-6
    for arr, grad in zip(toy_critic.arrays(), grads):
        for _ in range(6):
            idx = tuple(rng.integers(0, s) for s in arr.shape)
            old_val = arr[idx]
            arr[idx] = old_val + h
            up = loss()
            arr[idx] = old_val - h
            down = loss()
            arr[idx] = old_val
            fd = (up - down) / (2 * h)
            assert fd == pytest.approx(grad[idx], rel=1e-4, abs=1e-10)


def _tiny_batch(policy, rng, n=64):
    obs = rng.normal(size=(n, OBS))
    mean = nets.forward(policy.actor, obs)
    raw = mean + policy.sigma * rng.standard_normal(mean.shape)
    logp = ppo.log_prob(raw, mean, policy.sigma)
    dones = np.zeros(n, dtype=bool)
    dones[-1] = True
    return ppo.RolloutBatch(
        obs=obs, actions=np.clip(raw, -1, 1), raw_actions=raw,
        log_probs=logp, rewards=rng.normal(size=n),
        values=rng.normal(size=n), dones=dones,
        episodes=[ppo.Episode(0, n, "failure", 0.0)])


def test_update_with_zero_advantages_keeps_actor(toy_policy, toy_critic, rng):
    batch = _tiny_batch(toy_policy, rng)
    before = [a.copy() for a in toy_policy.actor.arrays()]
    config = ppo.PpoConfig(minibatch=16, epochs=2)
    ppo.ppo_update(toy_policy, toy_critic, batch, np.zeros(len(batch)),
                   batch.values.copy(), config,
                   np.random.default_rng(0))
    for a, b in zip(toy_policy.actor.arrays(), before):
        # zero advantages give exactly zero actor gradients; Adam keeps still
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_update_with_zero_lr_is_identity(toy_policy, toy_critic, rng):
    batch = _tiny_batch(toy_policy, rng)
    adv, targets = ppo.gae(batch, 0.99, 0.95)
    before = [a.copy() for a in toy_policy.actor.arrays()]
    config = ppo.PpoConfig(minibatch=16, epochs=2, adam_stepsize=1e-300)
    ppo.ppo_update(toy_policy, toy_critic, batch, adv, targets, config,
                   np.random.default_rng(0))
    for a, b in zip(toy_policy.actor.arrays(), before):
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_update_divergence_aborts(toy_policy, toy_critic, rng):
    batch = _tiny_batch(toy_policy, rng)
    adv = np.full(len(batch), np.nan)
    config = ppo.PpoConfig(minibatch=16, epochs=1)
    with pytest.raises(ppo.UpdateDiverged):
        ppo.ppo_update(toy_policy, toy_critic, batch, adv,
                       batch.values.copy(), config, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# Rollouts and training on the point-mass fixture
# ---------------------------------------------------------------------------

def test_collect_rollouts_deterministic(toy_critic, rng):
    policy = ppo.make_policy(2, 1, 8, -1.0, rng)
    critic = ppo.make_critic(2, 8, np.random.default_rng(5))
    a = ppo.collect_rollouts(policy, critic, PointMassEnv, 200, workers=1,
                             seed=42)
    b = ppo.collect_rollouts(policy, critic, PointMassEnv, 200, workers=1,
                             seed=42)
    np.testing.assert_array_equal(a.obs, b.obs)
    np.testing.assert_array_equal(a.rewards, b.rewards)
    np.testing.assert_array_equal(a.log_probs, b.log_probs)


def test_collect_rollout_episode_lengths(rng):
    policy = ppo.make_policy(2, 1, 8, -1.0, rng)
    critic = ppo.make_critic(2, 8, rng)
    batch = ppo.collect_rollouts(policy, critic, PointMassEnv, 200, seed=1)
    batch.validate()
    assert len(batch) >= 200
    for ep in batch.episodes:
        assert ep.end - ep.start == 60   # horizon-only termination
        assert ep.termination == "timeout"


def test_collect_rollouts_multi_worker_bounds(rng):
    policy = ppo.make_policy(2, 1, 8, -1.0, rng)
    critic = ppo.make_critic(2, 8, rng)
    k = 2
    batch = ppo.collect_rollouts(policy, critic, PointMassEnv, 300,
                                 workers=k, seed=3)
    batch.validate()
    assert 300 <= len(batch) < 300 + k * 60


def test_checkpoint_round_trip(tmp_path, toy_policy, toy_critic):
    path = tmp_path / "test.ckpt"
    ppo.save_checkpoint(path, toy_policy, toy_critic, 17, "task", "cafe")
    policy, critic, meta = ppo.load_checkpoint(path)
    for a, b in zip(policy.actor.arrays(), toy_policy.actor.arrays()):
        np.testing.assert_array_equal(a, b)
    for a, b in zip(critic.arrays(), toy_critic.arrays()):
        np.testing.assert_array_equal(a, b)
    assert policy.log_sigma == toy_policy.log_sigma
    assert meta == {"iteration": 17, "action_space": "task",
                    "config_hash": "cafe"}


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"not a checkpoint\n")
    with pytest.raises(ValueError, match="not a checkpoint"):
        ppo.load_checkpoint(path)


def test_train_zero_iterations_writes_initial_checkpoint(tmp_path):
    config = ppo.PpoConfig(iterations=1, samples_per_iteration=120,
                           minibatch=64, epochs=1, hidden=16)
    policy, critic, history = ppo.train(
        PointMassEnv, "task", config, seed=0, out_dir=str(tmp_path))
    assert (tmp_path / "checkpoint_init.ckpt").exists()
    assert (tmp_path / "training_log.csv").exists()
    assert len(history) == 1


def test_train_improves_point_mass_quickly():
    config = ppo.PpoConfig(iterations=12, samples_per_iteration=600,
                           minibatch=128, epochs=4, hidden=32,
                           adam_stepsize=3e-3, max_grad_norm=0.5,
                           log_sigma_task=-1.0)
    policy, critic, history = ppo.train(PointMassEnv, "task", config, seed=1)
    first = history[0]["mean_ep_reward"] / history[0]["mean_ep_len"]
    last = history[-1]["mean_ep_reward"] / history[-1]["mean_ep_len"]
    assert last > first + 0.1
