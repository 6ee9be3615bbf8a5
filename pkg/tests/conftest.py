import numpy as np
import pytest

from tsgait import model as mod


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """One visible PASS/FAIL line per acceptance criterion."""
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.module.__name__ == "test_acceptance":
        status = "PASS" if rep.passed else "FAIL"
        print(f"\n[acceptance] {status}: {item.name}")

FREE_BODY = """
format_version 1
name free_body
gravity 0 0 -9.81

body brick
  joint floating
  mass 2.5
  com 0.03 -0.02 0.05
  inertia 0.04 0.05 0.06 0.001 -0.002 0.0015
"""

PENDULUM = """
format_version 1
name double_pendulum
gravity 0 0 -9.81

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


@pytest.fixture(scope="session")
def biped():
    return mod.load_builtin("cassie_lite")


@pytest.fixture(scope="session")
def free_body():
    return mod.loads_model(FREE_BODY, require_biped=False)


@pytest.fixture(scope="session")
def pendulum():
    return mod.loads_model(PENDULUM, require_biped=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_state(model, rng, vel_scale=1.0, angle_scale=0.8):
    quat = rng.normal(size=4)
    quat /= np.linalg.norm(quat)
    quat = mod.canonical_quat(quat)
    return mod.GeneralizedState(
        base_position=rng.uniform(-1.0, 1.0, size=3),
        base_orientation=quat,
        joint_angles=rng.uniform(-angle_scale, angle_scale, size=model.nj),
        base_lin_vel=vel_scale * rng.uniform(-1.0, 1.0, size=3),
        base_ang_vel=vel_scale * rng.uniform(-1.0, 1.0, size=3),
        joint_rates=vel_scale * rng.uniform(-2.0, 2.0, size=model.nj),
    )


def zero_gravity(model):
    import copy

    out = copy.copy(model)
    out.gravity = np.zeros(3)
    return out
