"""Test fixtures shared across PPO tests: a trivially solvable control task."""

import numpy as np


class PointMassEnv:
    """1-D velocity tracking: action is a bounded acceleration.

    Mirrors the BipedEnv stepping interface so the rollout machinery can be
    exercised end to end on a task PPO provably solves in seconds.
    """

    observation_dim = 2
    action_dim = 1

    def __init__(self, seed=0, horizon=60, gain=0.25):
        self.rng = np.random.default_rng(seed)
        self.horizon = horizon
        self.gain = gain
        self.v = 0.0
        self.v_cmd = 0.0
        self.steps = 0
        self._done = True

    def reset(self, seed=None):
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.v = float(self.rng.uniform(-1.0, 1.0))
        self.v_cmd = float(self.rng.uniform(-0.8, 0.8))
        self.steps = 0
        self._done = False
        return self.observe()

    def observe(self):
        return np.array([self.v_cmd, self.v])

    def step_policy(self, action):
        if self._done:
            raise RuntimeError("episode finished; call reset() first")
        a = float(np.clip(np.asarray(action).reshape(-1)[0], -1.0, 1.0))
        self.v += self.gain * a
        reward = float(np.exp(-3.0 * abs(self.v - self.v_cmd)))
        self.steps += 1
        done = self.steps >= self.horizon
        self._done = done
        info = {"termination": "timeout" if done else None}
        return self.observe(), reward, done, info


def point_mass_factory(seed=0):
    return PointMassEnv(seed=seed)
