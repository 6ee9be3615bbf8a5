"""Window-kernel backend selection: compiled core with pure-Python fallback.

The 2 kHz inner loop dominates runtime, so it is implemented twice: a Cython
extension (``tsgait._fastcore``) for speed and a numpy reference
(``tsgait._pywindow``) that is always available.  Selection happens here at
environment construction; set ``TSGAIT_BACKEND=python|compiled`` to force one
(``compiled`` raises if the extension is missing).  Both kernels implement
the same ``run_window`` contract and are held to agreement by the
backend-equivalence test suite; ``benchmarks/bench_backends.py`` compares
their throughput.
"""

from __future__ import annotations

import os

import numpy as np

from . import tsid
from ._pywindow import PyWindowKernel

try:
    from . import _fastcore
except ImportError:
    _fastcore = None


def compiled_available():
    return _fastcore is not None


class CompiledWindowKernel:
    """Wrapper packing model constants for the Cython core."""

    name = "compiled"

    def __init__(self, model, gains, baseline_kp, baseline_kd, contact_params):
        if _fastcore is None:
            raise ImportError("tsgait._fastcore is not built")
        from .model import _spatial_inertia

        nb = model.nb
        parent = np.array([j.parent for j in model.joints], dtype=np.int32)
        axis = np.stack([j.axis for j in model.joints]).astype(float)
        origin_rot = np.stack([j.origin_rot for j in model.joints])
        origin_pos = np.stack([j.origin_pos for j in model.joints])
        inertia_sp = np.zeros((nb, 6, 6))
        for i, body in enumerate(model.bodies):
            inertia_sp[i] = _spatial_inertia(body)
        self._core = _fastcore.FastCore(
            parent, np.ascontiguousarray(axis),
            np.ascontiguousarray(origin_rot),
            np.ascontiguousarray(origin_pos),
            np.ascontiguousarray(inertia_sp),
            model.actuated_qvel.astype(np.int32),
            model.actuated_angle_index.astype(np.int32),
            np.ascontiguousarray(model.torque_limit),
            np.array(model.foot_body, dtype=np.int32),
            np.ascontiguousarray(model.foot_offset),
            np.ascontiguousarray(model.contact_x),
            np.ascontiguousarray(model.gravity),
            np.ascontiguousarray(gains.kp_swing), np.ascontiguousarray(gains.kd_swing),
            np.ascontiguousarray(gains.kp_stance), np.ascontiguousarray(gains.kd_stance),
            np.ascontiguousarray(gains.kp_joint), np.ascontiguousarray(gains.kd_joint),
            np.ascontiguousarray(np.broadcast_to(
                np.asarray(baseline_kp, float), (model.nu,)).copy()),
            np.ascontiguousarray(np.broadcast_to(
                np.asarray(baseline_kd, float), (model.nu,)).copy()),
            contact_params.ground_height, contact_params.normal_stiffness,
            contact_params.normal_damping, contact_params.friction_coefficient,
            contact_params.tangential_damping,
            tsid.COND_LIMIT, tsid.REG_EPSILON,
            np.ascontiguousarray(model.joint_damping),
        )

    def run_window(self, qpos, qvel, prev_base_vel, command, dt, n_ticks,
                   termination_height):
        return self._core.run_window(
            np.asarray(qpos, dtype=float).copy(),
            np.asarray(qvel, dtype=float).copy(),
            np.asarray(prev_base_vel, dtype=float).copy(),
            int(command["mode"]),
            np.ascontiguousarray(command["x_ref"], dtype=float),
            np.ascontiguousarray(command["x_delta"], dtype=float),
            np.ascontiguousarray(command["f_ref"], dtype=float),
            np.ascontiguousarray(command["phi"], dtype=float),
            np.ascontiguousarray(command["theta_target"], dtype=float),
            np.ascontiguousarray(command["joint_target"], dtype=float),
            float(command["xvel_ref"]), float(command["zvel_ref"]),
            float(command["zpos_ref"]), float(command["swing_apex"]),
            float(dt), int(n_ticks), float(termination_height),
        )


def select_kernel(model, gains, baseline_kp, baseline_kd, contact_params,
                  name=None):
    """Pick the window kernel: env var override, else compiled when built."""
    if name is None:
        name = os.environ.get("TSGAIT_BACKEND", "auto")
    if name not in ("auto", "python", "compiled"):
        raise ValueError(f"unknown backend '{name}'")
    if name == "python":
        return PyWindowKernel(model, gains, baseline_kp, baseline_kd,
                              contact_params)
    if name == "compiled" or compiled_available():
        return CompiledWindowKernel(model, gains, baseline_kp, baseline_kd,
                                    contact_params)
    return PyWindowKernel(model, gains, baseline_kp, baseline_kd,
                          contact_params)
