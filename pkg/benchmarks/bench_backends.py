"""Throughput comparison: compiled window kernel vs pure-Python fallback.

Usage:  python benchmarks/bench_backends.py [--steps N]

Times full policy steps (50 control ticks each) of the default walking
environment under both backends and reports ticks/second and the speedup.
"""

import argparse
import time

import numpy as np

from tsgait import backend as bk
from tsgait import env as envmod


def time_backend(name, n_steps):
    env = envmod.make_env(seed=0, speed=0.5, backend=name)
    env.reset(seed=0)
    action = np.zeros(10)
    # warm-up window
    env.step_policy(action)
    env.reset(seed=0)
    start = time.perf_counter()
    done_resets = 0
    for _ in range(n_steps):
        _, _, done, _ = env.step_policy(action)
        if done:
            env.reset(seed=0)
            done_resets += 1
    elapsed = time.perf_counter() - start
    return elapsed / n_steps, done_resets


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=200,
                        help="policy steps per backend (50 ticks each)")
    args = parser.parse_args()

    rows = []
    t_py, _ = time_backend("python", max(args.steps // 20, 5))
    rows.append(("python", t_py))
    if bk.compiled_available():
        t_fast, _ = time_backend("compiled", args.steps)
        rows.append(("compiled", t_fast))
    else:
        print("compiled core not built (python setup.py build_ext --inplace)")

    print(f"{'backend':10s} {'ms/step':>10s} {'us/tick':>10s} {'steps/s':>10s}")
    for name, per_step in rows:
        print(f"{name:10s} {per_step * 1e3:10.2f} {per_step / 50 * 1e6:10.1f} "
              f"{1.0 / per_step:10.0f}")
    if len(rows) == 2:
        print(f"speedup: {rows[0][1] / rows[1][1]:.1f}x")


if __name__ == "__main__":
    main()
