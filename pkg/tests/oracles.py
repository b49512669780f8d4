"""Independent reference implementations used only by the tests.

Each oracle recomputes a quantity by a different route than the package:
vertex enumeration instead of simplex, full game trees instead of count
vectors, exact rationals instead of floats, plain loops instead of kernels.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def lp_by_vertices(c, A, b, tol=1e-9):
    """``min c.x s.t. A x <= b, x >= 0`` by enumerating basic feasible points.

    Returns ``None`` when infeasible. Assumes the feasible set is bounded.
    """
    c, A, b = np.asarray(c, float), np.asarray(A, float), np.asarray(b, float)
    n = c.size
    G = np.vstack([A, -np.eye(n)])
    h = np.concatenate([b, np.zeros(n)])
    best = None
    for rows in itertools.combinations(range(G.shape[0]), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if np.all(G @ x <= h + tol):
            v = float(c @ x)
            if best is None or v < best:
                best = v
    return best


def ct_sequence_exact(T):
    """``c_T = 1/T``, ``c_{t-1} = c_t + c_t^2`` in exact rationals."""
    c = [Fraction(0)] * T
    c[T - 1] = Fraction(1, T)
    for i in range(T - 2, -1, -1):
        c[i] = c[i + 1] + c[i + 1] ** 2
    return c


def minimax_tree(table, T):
    """Value of the regret game by full recursion over histories.

    ``table[i, j]`` is the loss of grid point ``j`` against opponent move ``i``.
    The player moves first each round and the benchmark is the best grid point.
    """
    L = np.asarray(table, float)
    nz, nf = L.shape

    def rec(hist, paid):
        if len(hist) == T:
            bench = min(sum(L[i, j] for i in hist) for j in range(nf))
            return paid - bench
        return min(
            max(rec(hist + (i,), paid + L[i, j]) for i in range(nz)) for j in range(nf)
        )

    return rec((), 0.0)


def ftl_loop_linear(Z, linmin):
    """FTL regret on a linear loss with an explicit per-round loop."""
    S = np.zeros(Z.shape[1])
    total = 0.0
    for z in Z:
        f, _ = linmin(S)
        total += float(z @ f)
        S = S + z
    _, best = linmin(S)
    return total - best


def hinge(y, f, x=1.0):
    return max(0.0, 1.0 - y * x * f)


def grid_minimum(fun, a, b, n=20001):
    xs = np.linspace(a, b, n)
    vals = np.array([fun(x) for x in xs])
    i = int(np.argmin(vals))
    return xs[i], vals[i]


def l2_modulus(eps):
    """Modulus of convexity of the Euclidean unit ball."""
    return 1.0 - np.sqrt(1.0 - eps**2 / 4.0)


def lp_norm(x, p):
    return float(np.sum(np.abs(x) ** p) ** (1.0 / p))


def rademacher_positive_part(T, trials, rng):
    """Monte Carlo ``E[max(0, sum of T fair signs)]`` via binomial counts."""
    k = rng.binomial(T, 0.5, size=trials)
    return np.maximum(0, 2 * k - T)
