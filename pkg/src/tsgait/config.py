"""Unified experiment configuration: one TOML document, strict schema.

Sections mirror the owning modules (model / gait / controller / env / ppo /
reward / experiment).  Unknown keys are rejected; missing keys fall back to
the documented defaults; the fully resolved document is written verbatim
into every run directory so a run can be reproduced from its output alone.
"""

from __future__ import annotations

import copy
import functools
import os
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ImportError:                      # 3.10
    import tomli as tomllib

from . import env as envmod
from . import model as mod
from . import ppo, refgen, reward, tsid
from .contact import ContactParams


class ConfigError(ValueError):
    """Raised for unknown keys, bad types, or inconsistent values."""


# section -> key -> default (None means optional with no default)
SCHEMA = {
    "model": {
        "file": "builtin:cassie_lite",
    },
    "gait": {
        "cycle_period": 0.8,
        "double_support_fraction": 0.1,
        "swing_apex": 0.15,
        "speed_min": 0.0,
        "speed_max": 1.0,
        "base_height_ref": 0.95,
        "lateral_offset": 0.05,
        "horizontal_force_scale": 1.0,
    },
    "controller": {
        "kp_swing": [300.0, 150.0, 400.0],
        "kd_swing": [10.0, 3.0, 10.0],
        "kp_stance": [300.0, 150.0, 400.0],
        "kd_stance": [10.0, 3.0, 10.0],
        "kp_joint": [100.0, 50.0],
        "kd_joint": [10.0, 5.0],
        "baseline_kp": 100.0,
        "baseline_kd": 5.0,
    },
    "env": {
        "horizon": 150,
        "policy_rate": 40.0,
        "control_rate": 2000.0,
        "termination_height": 0.6,
        "speed_command": 0.5,
        "init_phase_random": True,
        "init_velocity_perturbation": 0.3,
        "sensor_noise": 0.0,
        "ground_height": 0.0,
        "normal_stiffness": 5e4,
        "normal_damping": 5e3,
        "friction_coefficient": 1.0,
        "tangential_damping": 1e3,
        "task_residual_bound": 0.5,
        "joint_residual_bound": 0.3,
    },
    "ppo": {
        "adam_stepsize": 1e-4,
        "epochs": 8,
        "minibatch": 1024,
        "gamma": 0.99,
        "clip_epsilon": 0.2,
        "max_grad_norm": 0.05,
        "gae_lambda": 0.95,
        "samples_per_iteration": 5000,
        "hidden": 256,
        "log_sigma_task": -2.5,
        "log_sigma_joint": -1.5,
        "iterations": 300,
        "checkpoint_every": 10,
        "advantage_norm": True,
        "workers": 1,
    },
    "reward": {
        "weights": list(reward.DEFAULT_WEIGHTS),
    },
    "experiment": {
        "output_dir": "runs",
        "run_id": "default",
        "action_space": "task",
        "seeds": [1, 2, 3, 4, 5],
        "eval_speeds": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
        "eval_warmup_s": 2.0,
        "eval_measure_s": 8.0,
        "grf_bins": 20,
        "explore_samples": 50000,
        "explore_seeds": [1, 2, 3],
        "explore_speed": 0.5,
        "backend": "auto",
    },
}


def _resolve(document):
    resolved = {}
    for section, keys in SCHEMA.items():
        given = document.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"section [{section}] must be a table")
        for key in given:
            if key not in keys:
                raise ConfigError(f"unknown key '{key}' in section "
                                  f"[{section}]")
        out = {}
        for key, default in keys.items():
            value = given.get(key, copy.deepcopy(default))
            if default is not None and value is not None:
                if isinstance(default, bool):
                    if not isinstance(value, bool):
                        raise ConfigError(f"[{section}] {key} must be a bool")
                elif isinstance(default, (int, float)) and not isinstance(
                        value, (int, float)):
                    raise ConfigError(f"[{section}] {key} must be a number")
                elif isinstance(default, list) and not isinstance(value, list):
                    raise ConfigError(f"[{section}] {key} must be a list")
            out[key] = value
        resolved[section] = out
    for section in document:
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
    return resolved


@dataclass
class ExperimentConfig:
    raw: dict

    @property
    def experiment(self):
        return self.raw["experiment"]

    def model(self):
        return _load_model_entry(self.raw["model"]["file"])

    def gait_params(self, model=None):
        g = self.raw["gait"]
        total = mod.total_mass(model) if model is not None else \
            mod.total_mass(self.model())
        return refgen.GaitParams(
            cycle_period=g["cycle_period"],
            double_support_fraction=g["double_support_fraction"],
            swing_apex=g["swing_apex"],
            speed_range=(g["speed_min"], g["speed_max"]),
            base_height_ref=g["base_height_ref"],
            total_mass=total,
            lateral_offset=g["lateral_offset"],
            horizontal_force_scale=g["horizontal_force_scale"],
        )

    def gains(self):
        c = self.raw["controller"]
        return tsid.TaskGains(
            kp_swing=np.asarray(c["kp_swing"], float),
            kd_swing=np.asarray(c["kd_swing"], float),
            kp_stance=np.asarray(c["kp_stance"], float),
            kd_stance=np.asarray(c["kd_stance"], float),
            kp_joint=np.asarray(c["kp_joint"], float),
            kd_joint=np.asarray(c["kd_joint"], float),
        )

    def contact_params(self):
        e = self.raw["env"]
        return ContactParams(
            ground_height=e["ground_height"],
            normal_stiffness=e["normal_stiffness"],
            normal_damping=e["normal_damping"],
            friction_coefficient=e["friction_coefficient"],
            tangential_damping=e["tangential_damping"],
        )

    def episode_config(self, seed=0, speed=None):
        e = self.raw["env"]
        return envmod.EpisodeConfig(
            horizon=e["horizon"],
            policy_rate=e["policy_rate"],
            control_rate=e["control_rate"],
            termination_height=e["termination_height"],
            speed_command=e["speed_command"] if speed is None else speed,
            init_phase_random=e["init_phase_random"],
            init_velocity_perturbation=e["init_velocity_perturbation"],
            seed=seed,
            sensor_noise=e["sensor_noise"],
        )

    def ppo_config(self):
        p = self.raw["ppo"]
        workers = int(os.environ.get("TSGAIT_WORKERS", p["workers"]))
        return ppo.PpoConfig(
            adam_stepsize=p["adam_stepsize"], epochs=p["epochs"],
            minibatch=p["minibatch"], gamma=p["gamma"],
            clip_epsilon=p["clip_epsilon"],
            max_grad_norm=p["max_grad_norm"],
            gae_lambda=p["gae_lambda"],
            samples_per_iteration=p["samples_per_iteration"],
            hidden=p["hidden"], log_sigma_task=p["log_sigma_task"],
            log_sigma_joint=p["log_sigma_joint"],
            iterations=p["iterations"],
            checkpoint_every=p["checkpoint_every"],
            advantage_norm=p["advantage_norm"], workers=workers,
            seeds=list(self.raw["experiment"]["seeds"]),
        )

    def reward_weights(self):
        return reward.RewardWeights(np.asarray(self.raw["reward"]["weights"],
                                               float))

    def validate(self):
        weights = self.raw["reward"]["weights"]
        if len(weights) != reward.N_TERMS:
            raise ConfigError(f"[reward] weights must have {reward.N_TERMS} "
                              f"entries, got {len(weights)}")
        if self.experiment["action_space"] not in (envmod.TASK, envmod.JOINT):
            raise ConfigError("[experiment] action_space must be task|joint")
        try:
            self.episode_config().validate()
            self.ppo_config().validate()
            self.gains().validate()
            self.contact_params().validate()
            self.gait_params(model=None if False else None)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def env_factory(self, action_space=None, seed=0, speed=None,
                    backend=None):
        """Picklable zero-argument environment builder for worker pools."""
        return functools.partial(
            build_env, self.raw,
            action_space or self.experiment["action_space"], seed, speed,
            backend if backend is not None else self.experiment["backend"])


def _load_model_entry(entry):
    if entry.startswith("builtin:"):
        return mod.load_builtin(entry.split(":", 1)[1])
    return mod.load_model(entry)


def build_env(raw, action_space, seed, speed, backend):
    """Module-level builder so env factories pickle across processes."""
    cfg = ExperimentConfig(raw=raw)
    e = raw["env"]
    model = cfg.model()
    return envmod.BipedEnv(
        model=model,
        gait=cfg.gait_params(model=model),
        gains=cfg.gains(),
        contact_params=cfg.contact_params(),
        episode=cfg.episode_config(seed=seed, speed=speed),
        action_mode=action_space,
        action_scale=envmod.ActionScale(
            task_residual_bound=e["task_residual_bound"],
            joint_residual_bound=e["joint_residual_bound"]),
        baseline_kp=raw["controller"]["baseline_kp"],
        baseline_kd=raw["controller"]["baseline_kd"],
        reward_weights=cfg.reward_weights(),
        backend=None if backend == "auto" else backend,
    )


def load_config(path=None, overrides=None):
    """Parse, resolve against defaults, and validate a config document."""
    document = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                document = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if overrides:
        for dotted, value in overrides.items():
            section, _, key = dotted.partition(".")
            document.setdefault(section, {})[key] = value
    cfg = ExperimentConfig(raw=_resolve(document))
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# TOML emission (resolved config written into run directories)
# ---------------------------------------------------------------------------

def _toml_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize config value {value!r}")


def dumps_toml(resolved):
    lines = ["# resolved tsgait configuration (schema_version 1)"]
    for section, keys in resolved.items():
        lines.append("")
        lines.append(f"[{section}]")
        for key, value in keys.items():
            lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"


def write_resolved(cfg, directory):
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "config.toml")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_toml(cfg.raw))
    return path
