"""Time the numba kernels against the numpy fallbacks on the same inputs.

    python3 benchmarks/bench_kernels.py [--grid 256 256 64] [--repeat 3]
"""

import argparse
import time

import numpy as np

from framelab import kernels, models, splitting


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_pullback(shape, repeat):
    sys_ = models.circle_extension(np.array([[2, 1], [1, 1]]), models.sine_phase(0.2))
    plan = splitting.sweep_plan(sys_, shape)
    slope = np.random.default_rng(0).uniform(-1, 1, shape)
    args = (slope, plan.fx, plan.fy, plan.ft, plan.forcing, plan.mult)
    kernels.pullback_step_numba(*args)  # compile / load cache
    t_nb, (a, _) = best_of(lambda: kernels.pullback_step_numba(*args), repeat)
    t_np, (b, _) = best_of(lambda: kernels.pullback_step_numpy(*args), repeat)
    return t_nb, t_np, float(np.max(np.abs(a - b)))


def bench_qr(n_iter, n_orbits, repeat):
    rng = np.random.default_rng(1)
    mats = rng.normal(size=(n_iter, n_orbits, 3, 3)) + 2 * np.eye(3)
    kernels.qr_log_diagonals_numba(mats[:2])
    t_nb, a = best_of(lambda: kernels.qr_log_diagonals_numba(mats), repeat)
    t_np, b = best_of(lambda: kernels.qr_log_diagonals_numpy(mats), repeat)
    return t_nb, t_np, float(np.max(np.abs(a.sum(0) - b.sum(0))))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, nargs=3, default=[256, 256, 64])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    shape = tuple(args.grid)
    rows = [
        (f"pullback sweep {shape}",) + bench_pullback(shape, args.repeat),
        ("QR log-diagonals 1100 x 16 x 3x3",) + bench_qr(1100, 16, args.repeat),
    ]
    print(f"{'kernel':<38} {'numba s':>9} {'numpy s':>9} {'speedup':>8} {'max diff':>10}")
    for name, t_nb, t_np, diff in rows:
        print(f"{name:<38} {t_nb:9.4f} {t_np:9.4f} {t_np / t_nb:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
