"""Time the batch RK4 kernel on each available backend.

Usage: python benchmarks/bench_kernels.py [--samples N] [--t-final T] [--repeat R]
"""

import argparse
import time

import numpy as np

from hamstab import analyze, stabilize
from hamstab._kernels import available_backends, rk4_batch
from hamstab.sim import IntegratorConfig, sample_ball
from hamstab.systems import make_system


def closed_loop(name):
    H, guess = make_system(name)
    z0, cls, T = analyze(H, guess)
    return stabilize(H, T)


def bench(CL, Z, cfg, backend, repeat):
    nsteps, h = cfg.fixed_steps()
    best, final = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        final, status = rk4_batch(*CL.kernel_args(), Z, h, nsteps, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, final


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--t-final", type=float, default=100.0)
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--systems", nargs="+", default=["model", "hydrogen"])
    args = ap.parse_args(argv)

    cfg = IntegratorConfig(dt=args.dt, t_final=args.t_final)
    backends = available_backends()
    print(f"{'system':10s} {'backend':8s} {'seconds':>9s} {'speedup':>8s} {'max diff':>10s}")
    for name in args.systems:
        CL = closed_loop(name)
        Z = sample_ball(CL.z0, 0.05, args.samples, np.random.default_rng(0))
        results = {b: bench(CL, Z, cfg, b, args.repeat) for b in backends}
        ref_t, ref_z = results["python"]
        for b, (t, z) in results.items():
            diff = float(np.max(np.abs(z - ref_z)))
            print(f"{name:10s} {b:8s} {t:9.3f} {ref_t / t:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
