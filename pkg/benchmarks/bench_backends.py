#!/usr/bin/env python3
"""Time the numba kernels against their numpy twins.

Usage: python benchmarks/bench_backends.py [--particles 100] [--horizon 60] [--repeat 3]

The numba functions are warmed up once first, so compile time is excluded
(the first call, compile or cache load, is printed separately). Each row also reports the max abs difference
between the two results.
"""
import argparse
import time

import numpy as np

from agc import kernels, plant
from agc.lqrsyn import lqr
from agc.numkern import rk4_propagator
from agc.psoopt import SwarmConfig, gains_from_positions
from agc.simkit import DIVERGENCE_LIMIT


def best_of(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--particles", type=int, default=100)
    ap.add_argument("--horizon", type=float, default=60.0)
    ap.add_argument("--dt", type=float, default=0.005)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    m = plant.paper_model()
    rng = np.random.default_rng(args.seed)
    _, k_lqr = lqr(m)
    # a swarm-like batch: the stabilizing LQR gain plus small random perturbations
    pos = k_lqr.to_vector() + rng.uniform(-0.2, 0.2, size=(args.particles, 22))
    gains = gains_from_positions(pos, "full")
    nsteps = int(round(args.horizon / args.dt))
    acl = m.a[None] - m.b[None] @ gains
    mm, nn = rk4_propagator(acl, args.dt)
    g = np.ascontiguousarray(nn @ (m.f @ np.array([0.01, 0.0])))
    mm = np.ascontiguousarray(mm)

    def ise_of(fn):
        return lambda: fn(mm, g, args.dt, nsteps, DIVERGENCE_LIMIT, 0, 4)[0]

    # the trajectory kernels fill a caller-owned buffer
    def traj(fn):
        def run():
            out = np.zeros((nsteps + 1, 11))
            fn(mm[0], g[0], nsteps, DIVERGENCE_LIMIT, out)
            return out
        return run

    s = m.b @ m.b.T
    q = np.eye(11)

    def ric(fn):
        def run():
            p = np.zeros((11, 11))
            fn(m.a, s, q, p, 0.002, 20000, 1e-10)
            return p
        return run

    cases = {
        "batch_ise": (ise_of(kernels.batch_ise_numba), ise_of(kernels.batch_ise_numpy)),
        "trajectory": (traj(kernels.trajectory_numba), traj(kernels.trajectory_numpy)),
        "riccati_flow": (ric(kernels.riccati_flow_numba), ric(kernels.riccati_flow_numpy)),
    }

    print(f"particles={args.particles} steps={nsteps} repeat={args.repeat} "
          f"(SwarmConfig default population {SwarmConfig().population})")
    print(f"{'kernel':<14}{'1st call s':>11}{'numba s':>11}{'numpy s':>11}{'speedup':>9}{'max diff':>11}")
    for name, (fast, slow) in cases.items():
        t0 = time.perf_counter()
        fast()
        compile_s = time.perf_counter() - t0
        t_fast, r_fast = best_of(fast, args.repeat)
        t_slow, r_slow = best_of(slow, args.repeat)
        diff = float(np.max(np.abs(r_fast - r_slow)))
        print(f"{name:<14}{compile_s:>11.3f}{t_fast:>11.4f}{t_slow:>11.4f}"
              f"{t_slow / t_fast:>9.1f}{diff:>11.2e}")


if __name__ == "__main__":
    main()
