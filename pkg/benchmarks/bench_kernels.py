"""Time the compiled kernels against the numpy fallback.

Run with ``python benchmarks/bench_kernels.py``. Each kernel is timed on the
same inputs for both backends and the outputs are checked to agree.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from regretlab import kernels, suite
from regretlab.adversaries import ct_sequence
from regretlab.geometry import Simplex, l2_ball, lp_ball
from regretlab.harness import _interval_table


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(n, T, rng):
    Zball = suite.ball().Z.sample(rng, n * T).reshape(n, T, 2)
    Zexp = np.eye(2)[rng.integers(2, size=(n, T))]
    ck = [T // 4, T // 2, T]
    c = ct_sequence(T)
    U = rng.random((n, T))
    W = kernels.ct_paths(U, c, backend="python")
    g = suite.hinge()
    L = _interval_table(g, g.Z.points)
    idx = rng.integers(2, size=(n, T))
    return {
        "ftl_linear l2_ball": lambda b: kernels.ftl_linear(Zball, l2_ball(), ck, backend=b),
        "ftl_linear lp_ball(3)": lambda b: kernels.ftl_linear(Zball, lp_ball(3.0), ck, backend=b),
        "ftl_linear simplex": lambda b: kernels.ftl_linear(Zexp, Simplex(2), ck, backend=b),
        "ct_paths": lambda b: kernels.ct_paths(U, c, backend=b),
        "ct_surrogate": lambda b: kernels.ct_surrogate(W, c, backend=b),
        "ftl_table hinge": lambda b: kernels.ftl_table(idx, L, ck, backend=b),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=200)
    ap.add_argument("--T", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if "compiled" not in kernels.BACKENDS:
        print("compiled extension not built; only the fallback is available")
        return 1
    rng = np.random.default_rng(0)
    print(f"{args.paths} paths x T={args.T}, best of {args.repeat}")
    print(f"{'kernel':<24}{'python s':>10}{'compiled s':>12}{'speedup':>9}  agree")
    for name, fn in cases(args.paths, args.T, rng).items():
        tp, op = best_of(lambda: fn("python"), args.repeat)
        tc, oc = best_of(lambda: fn("compiled"), args.repeat)
        op, oc = (op if isinstance(op, tuple) else (op,)), (oc if isinstance(oc, tuple) else (oc,))
        agree = all(np.allclose(a, b, atol=1e-8) for a, b in zip(op, oc))
        print(f"{name:<24}{tp:>10.4f}{tc:>12.4f}{tp / tc:>8.1f}x  {agree}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
