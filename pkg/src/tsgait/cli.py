"""Command-line entry point: train / eval / explore / refdump / check.

Exit codes: 0 success, 1 validation error, 2 invariant failure,
3 runtime divergence.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import checks as checkmod
from . import config as cfgmod
from . import evalrun, exploration, refgen
from . import env as envmod
from . import ppo

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INVARIANT = 2
EXIT_DIVERGED = 3


def _write_csv(path, columns, rows, schema_version=1):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# schema_version={schema_version}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _parse_seeds(text):
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_speeds(text):
    if ":" in text:
        lo, hi, step = (float(t) for t in text.split(":"))
        n = int(round((hi - lo) / step)) + 1
        return [round(lo + i * step, 10) for i in range(n)]
    return [float(tok) for tok in text.split(",") if tok.strip()]


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def cmd_train(args):
    cfg = cfgmod.load_config(args.config)
    action_space = args.action_space or cfg.experiment["action_space"]
    seeds = _parse_seeds(args.seeds) if args.seeds else \
        list(cfg.experiment["seeds"])
    ppo_config = cfg.ppo_config()
    if args.iterations:
        ppo_config.iterations = args.iterations
    if args.smoke:
        ppo_config.iterations = min(ppo_config.iterations, 30)
    out_root = args.output or os.path.join(cfg.experiment["output_dir"],
                                           cfg.experiment["run_id"])
    os.makedirs(out_root, exist_ok=True)
    cfgmod.write_resolved(cfg, out_root)
    from .ppo.policy import hash_text
    config_hash = hash_text(cfgmod.dumps_toml(cfg.raw))

    curves = {}
    for seed in seeds:
        run_dir = os.path.join(out_root, f"{action_space}_seed{seed}")
        print(f"[train] {action_space} seed {seed} -> {run_dir}")
        factory = cfg.env_factory(action_space=action_space, seed=seed)

        def progress(row, seed=seed):
            print(f"  seed {seed} iter {row['iteration']:4d} "
                  f"reward {row['mean_ep_reward']:8.2f} "
                  f"len {row['mean_ep_len']:6.1f} "
                  f"wall {row['wall_time_s']:7.1f}s", flush=True)

        try:
            _, _, history = ppo.train(
                factory, action_space, ppo_config, seed=seed,
                out_dir=run_dir, config_hash=config_hash,
                on_iteration=progress)
        except ppo.UpdateDiverged as exc:
            print(f"error: training diverged: {exc}", file=sys.stderr)
            return EXIT_DIVERGED
        curves[seed] = [row["mean_ep_reward"] for row in history]

    columns = ["iteration"] + [f"reward_seed_{s}" for s in seeds]
    n_iter = max(len(c) for c in curves.values())
    rows = []
    for i in range(n_iter):
        rows.append([i + 1] + [curves[s][i] if i < len(curves[s]) else ""
                               for s in seeds])
    _write_csv(os.path.join(out_root, f"learning_curve_{action_space}.csv"),
               columns, rows)
    print(f"[train] wrote learning_curve_{action_space}.csv")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def cmd_eval(args):
    cfg = cfgmod.load_config(args.config)
    policy, critic, meta = ppo.load_checkpoint(args.checkpoint)
    obs_dim = policy.actor.w1.shape[1]
    if obs_dim != envmod.OBS_DIM:
        print(f"error: checkpoint observation dim {obs_dim} does not match "
              f"the environment ({envmod.OBS_DIM})", file=sys.stderr)
        return EXIT_VALIDATION
    speeds = _parse_speeds(args.speeds) if args.speeds else None
    out_dir = args.output or "eval_out"
    os.makedirs(out_dir, exist_ok=True)
    cfgmod.write_resolved(cfg, out_dir)
    trace = [] if args.trace else None
    report = evalrun.evaluate(cfg, policy, meta["action_space"],
                              speeds=speeds, trace=trace)
    _write_csv(os.path.join(out_dir, "speed_tracking.csv"),
               evalrun.SPEED_COLUMNS, report.speed_rows)
    _write_csv(os.path.join(out_dir, "grf_profile.csv"),
               evalrun.GRF_COLUMNS, report.grf_rows)
    if trace is not None:
        _write_csv(os.path.join(out_dir, "episode_trace.csv"),
                   evalrun.TRACE_COLUMNS, trace)
    print(f"[eval] {len(report.speed_rows)} speeds, {report.falls} falls, "
          f"outputs in {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# explore
# ---------------------------------------------------------------------------

def cmd_explore(args):
    cfg = cfgmod.load_config(args.config)
    exp = cfg.experiment
    out_dir = args.output or "explore_out"
    os.makedirs(out_dir, exist_ok=True)
    cfgmod.write_resolved(cfg, out_dir)
    n_samples = args.samples or exp["explore_samples"]
    seeds = _parse_seeds(args.seeds) if args.seeds else exp["explore_seeds"]
    scenarios = [(mode, space)
                 for mode in (exploration.SINGLE_STEP, exploration.EPISODE)
                 for space in (envmod.TASK, envmod.JOINT)]
    ppo_cfg = cfg.ppo_config()
    sigma = {envmod.TASK: ppo_cfg.log_sigma_task,
             envmod.JOINT: ppo_cfg.log_sigma_joint}
    report_lines = []
    for mode, space in scenarios:
        for seed in seeds:
            study = exploration.NoiseStudyConfig(
                mode=mode, action_space=space, log_sigma=sigma[space],
                n_samples=n_samples, speed=exp["explore_speed"], seed=seed,
                horizon=cfg.raw["env"]["horizon"])
            rows = []
            report, _ = exploration.run_noise_study(study, sample_rows=rows)
            name = f"samples_{mode}_{space}_seed{seed}.csv"
            _write_csv(os.path.join(out_dir, name),
                       exploration.SAMPLE_COLUMNS, rows)
            report_lines.extend(report.lines() + [f"seed {seed}", ""])
            print(f"[explore] {mode}/{space} seed {seed}: "
                  f"hull_xz {report.hull_area_xz:.4f} "
                  f"occupancy {report.occupancy_cells}")
    with open(os.path.join(out_dir, "coverage_report.txt"), "w",
              encoding="utf-8") as fh:
        fh.write("\n".join(report_lines) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# refdump / check
# ---------------------------------------------------------------------------

def cmd_refdump(args):
    cfg = cfgmod.load_config(args.config)
    model = cfg.model()
    params = cfg.gait_params(model=model)
    params.theta_ref = refgen.flat_foot_theta_ref(model, params, phase=0.125)
    params.com_forward = refgen.static_com_forward(model, params)
    try:
        rows = refgen.dump_cycle(params, args.speed,
                                 rate=int(cfg.raw["env"]["control_rate"]))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = args.output or "references.csv"
    _write_csv(out, refgen.DUMP_COLUMNS, rows)
    print(f"[refdump] wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_check(args):
    model = None
    if args.model:
        try:
            from . import model as mod
            model = mod.load_model(args.model)
        except Exception as exc:
            print(f"FAIL model file: {exc}")
            return EXIT_INVARIANT
    results = checkmod.run_all(model=model)
    failures = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
        failures += 0 if ok else 1
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return EXIT_OK if failures == 0 else EXIT_INVARIANT


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="tsgait",
        description="Task-space residual RL for a simulated biped")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run PPO training")
    p_train.add_argument("--config", default=None)
    p_train.add_argument("--output", default=None)
    p_train.add_argument("--action-space", choices=["task", "joint"],
                         default=None)
    p_train.add_argument("--seeds", default=None,
                         help="comma-separated seed list")
    p_train.add_argument("--iterations", type=int, default=None)
    p_train.add_argument("--smoke", action="store_true",
                         help="cap the run at 30 iterations")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--config", default=None)
    p_eval.add_argument("--speeds", default=None,
                        help="comma list or lo:hi:step")
    p_eval.add_argument("--output", default=None)
    p_eval.add_argument("--trace", action="store_true",
                        help="write per-step episode_trace.csv")
    p_eval.set_defaults(func=cmd_eval)

    p_explore = sub.add_parser("explore", help="exploration-noise study")
    p_explore.add_argument("--config", default=None)
    p_explore.add_argument("--output", default=None)
    p_explore.add_argument("--samples", type=int, default=None)
    p_explore.add_argument("--seeds", default=None)
    p_explore.set_defaults(func=cmd_explore)

    p_dump = sub.add_parser("refdump", help="dump one reference cycle as CSV")
    p_dump.add_argument("--config", default=None)
    p_dump.add_argument("--speed", type=float, default=0.5)
    p_dump.add_argument("--output", default=None)
    p_dump.set_defaults(func=cmd_refdump)

    p_check = sub.add_parser("check", help="run the invariant suite")
    p_check.add_argument("--config", default=None)
    p_check.add_argument("--model", default=None,
                         help="validate a model description file")
    p_check.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except cfgmod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ppo.UpdateDiverged as exc:
        print(f"error: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
