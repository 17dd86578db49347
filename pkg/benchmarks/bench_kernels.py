"""Benchmark the compiled kernels against the pure numpy fallback.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from smalldev._kernels import _ref

try:
    from smalldev._kernels import _fast
except ImportError:
    _fast = None


def qmc_problem(n, n_pts, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) / np.sqrt(n)
    sigma = a @ a.T + np.eye(n)
    chol = np.ascontiguousarray(np.linalg.cholesky(sigma))
    hi = rng.uniform(0.5, 2.0, size=n) * np.sqrt(np.diag(sigma))
    pts = np.ascontiguousarray(rng.random((n_pts, n - 1)))
    return chol, hi, pts


def time_call(fn, *args, repeat=3):
    best = np.inf
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    print(f"{'kernel':<34}{'python':>12}{'cython':>12}{'speedup':>9}")
    for n, n_pts in ((32, 4096), (128, 4096), (256, 8192)):
        chol, hi, pts = qmc_problem(n, n_pts)
        t_ref, ref_out = time_call(_ref.qmc_logprods, chol, hi, pts, True)
        row = f"qmc_logprods n={n:<4} pts={n_pts:<6}"
        if _fast is None:
            print(f"{row:<34}{t_ref * 1e3:>10.1f}ms{'n/a':>12}")
            continue
        t_fast, fast_out = time_call(_fast.qmc_logprods, chol, hi, pts, True)
        assert np.allclose(ref_out, fast_out, rtol=1e-9)
        print(f"{row:<34}{t_ref * 1e3:>10.1f}ms{t_fast * 1e3:>10.1f}ms"
              f"{t_ref / t_fast:>8.1f}x")
    for n in (512, 2048, 4096):
        rho = 0.8
        r = np.ascontiguousarray(rho ** np.arange(n, dtype=np.float64))
        t_ref, ref_out = time_call(_ref.levinson_logdet, r, n)
        row = f"levinson_logdet n={n:<6}"
        if _fast is None:
            print(f"{row:<34}{t_ref * 1e3:>10.1f}ms{'n/a':>12}")
            continue
        t_fast, fast_out = time_call(_fast.levinson_logdet, r, n)
        assert abs(ref_out[0] - fast_out[0]) < 1e-9 * abs(ref_out[0])
        print(f"{row:<34}{t_ref * 1e3:>10.1f}ms{t_fast * 1e3:>10.1f}ms"
              f"{t_ref / t_fast:>8.1f}x")


if __name__ == "__main__":
    main()
