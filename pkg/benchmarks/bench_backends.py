"""Benchmark the numba kernels against the pure-numpy fallbacks.

Times the three hot paths on representative workloads: batched prox calls
(the diagnostics sampling pattern), the dual-ascent subproblem loop (the
prox-linear inner solver), and the min-norm box QP (stationarity distance).

Run:  python benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import time

import numpy as np

from proxbound import _kernels as K


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_prox(impl_value, impl_prox, n=200_000, calls=20):
    rng = np.random.default_rng(0)
    x = rng.normal(size=n) * 2.0
    p1 = np.full(n, 0.7)
    p2 = np.full(n, 0.5)

    def run():
        acc = 0.0
        for _ in range(calls):
            y = impl_prox(K.KIND_HUBER, p1, p2, x, 0.3)
            acc += impl_value(K.KIND_HUBER, p1, p2, y)
        return acc

    return run


def bench_dual_ascent(impl, m=20, n=10, solves=60):
    rng = np.random.default_rng(1)
    J = rng.standard_normal((m, n))
    cbar = rng.standard_normal(m)
    gp1 = np.full(n, 0.1)
    gp2 = np.zeros(n)
    hp1 = np.ones(m)
    hp2 = np.zeros(m)
    hlo, hhi = -hp1, hp1
    hl1 = np.zeros(m)
    hquad = np.zeros(m)
    t = 0.2
    step = 1.0 / (t * float(np.linalg.norm(J, 2) ** 2) + 1.0)
    X = rng.normal(size=(solves, n))

    def run():
        total = 0
        for x in X:
            fx = (K.penalty_value_np(K.KIND_ABS, gp1, gp2, x)
                  + K.penalty_value_np(K.KIND_ABS, hp1, hp2,
                                       cbar + J @ (x - x)))
            _, _, _, iters, ok = impl(
                K.KIND_ABS, gp1, gp2, K.KIND_ABS, hp1, hp2, hlo, hhi, hl1,
                hquad, J, cbar, x, t, step, 1e-10, fx,
                1e-12 * (1 + abs(fx)), 10 ** 6)
            assert ok
            total += iters
        return total

    return run


def bench_minnorm(impl, m=20, n=10, solves=200):
    rng = np.random.default_rng(2)
    J = rng.standard_normal((m, n))
    step = 1.0 / (1.0 + float(np.linalg.norm(J, 2) ** 2))
    boxes = [(np.full(n, -0.1), np.full(n, 0.1),
              rng.uniform(-1, 0, m), rng.uniform(0, 1, m))
             for _ in range(solves)]

    def run():
        acc = 0.0
        for vlo, vhi, wlo, whi in boxes:
            d, _ = impl(J, vlo, vhi, wlo, whi, step, 1e-10, 10 ** 5)
            acc += d
        return acc

    return run


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if not hasattr(K, "penalty_prox_nb"):
        print("numba unavailable; nothing to compare")
        return

    cases = [
        ("prox+value batch (200k coords x 20)",
         bench_prox(K.penalty_value_np, K.penalty_prox_np),
         bench_prox(K.penalty_value_nb, K.penalty_prox_nb)),
        ("dual ascent (60 subproblem solves)",
         bench_dual_ascent(K.dual_ascent_np),
         bench_dual_ascent(K.dual_ascent_nb)),
        ("min-norm box QP (200 solves)",
         bench_minnorm(K.minnorm_boxqp_np),
         bench_minnorm(K.minnorm_boxqp_nb)),
    ]

    print(f"active backend: {K.active_backend()}")
    print(f"{'kernel':<40} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for name, f_np, f_nb in cases:
        f_nb()  # JIT warm-up
        t_np = timeit(f_np, args.repeats)
        t_nb = timeit(f_nb, args.repeats)
        print(f"{name:<40} {t_np * 1e3:>8.1f}ms {t_nb * 1e3:>8.1f}ms "
              f"{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
