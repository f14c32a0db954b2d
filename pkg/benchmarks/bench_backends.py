"""Compiled vs pure-Python backend throughput.

Times whole simulations (rounds per second) for a few policies and the
stand-alone probability solver for growing n, then prints speed-ups.

    python benchmarks/bench_backends.py --rounds 2000 --servers 100
"""

import argparse
import time

import numpy as np

from scdsim import policies
from scdsim.core import ClusterSpec, RandomStreams
from scdsim.sim import BACKENDS, SimulationConfig, run_simulation

try:
    from scdsim import _kernels
except ImportError:  # pragma: no cover
    _kernels = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_engine(args):
    rates = RandomStreams(args.seed).draw_rates(args.servers, 1.0, 10.0)
    cluster = ClusterSpec.with_load(rates, args.dispatchers, args.rho)
    print(f"engine: n={args.servers} m={args.dispatchers} rho={args.rho} rounds={args.rounds}")
    print(f"{'policy':<14}" + "".join(f"{b + ' r/s':>16}" for b in BACKENDS) + f"{'speed-up':>10}")
    for policy in args.policies:
        rate = {}
        for backend in BACKENDS:
            rounds = args.rounds if backend == "compiled" else max(1, args.rounds // 10)
            cfg = SimulationConfig(cluster, policy, rounds, args.seed)
            rate[backend] = rounds / best_of(lambda: run_simulation(cfg, backend), args.repeats)
        ratio = rate["compiled"] / rate["python"] if len(rate) == 2 else float("nan")
        print(f"{policy:<14}" + "".join(f"{rate[b]:>16.0f}" for b in BACKENDS) + f"{ratio:>9.1f}x")


def bench_solver(args):
    rng = np.random.default_rng(args.seed)
    print("\nprobability solver (a = 5n), microseconds per call")
    print(f"{'n':>6}{'python':>12}{'compiled':>12}{'speed-up':>10}")
    for n in (16, 128, 1024, 8192):
        q = rng.integers(0, 20, n).astype(float)
        mu = rng.uniform(1.0, 10.0, n)
        a = 5.0 * n
        reps = max(3, 20_000 // n)
        py = best_of(lambda: [policies.scd_probabilities(q, mu, a) for _ in range(reps)], args.repeats) / reps
        if _kernels is None:
            print(f"{n:>6}{py * 1e6:>12.1f}{'-':>12}{'-':>10}")
            continue
        c = best_of(lambda: [_kernels.scd_probabilities(q, mu, a) for _ in range(reps)], args.repeats) / reps
        print(f"{n:>6}{py * 1e6:>12.1f}{c * 1e6:>12.1f}{py / c:>9.1f}x")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rounds", type=int, default=2000)
    p.add_argument("--servers", type=int, default=100)
    p.add_argument("--dispatchers", type=int, default=10)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--policies", default="scd,twf,jsq,hjsq2,lsq,wr")
    args = p.parse_args()
    args.policies = args.policies.split(",")
    if len(BACKENDS) < 2:
        print("compiled kernels not built; only the Python backend is available")
    bench_engine(args)
    bench_solver(args)


if __name__ == "__main__":
    main()
