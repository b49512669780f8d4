"""Small dense two-phase simplex solver.

Instances in this package are tiny (a handful of variables and constraints),
so the solver keeps a full tableau and uses Bland's rule throughout. That
makes every run deterministic and cycling-free at the cost of speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

RATIO_TOL = 1e-10
COST_TOL = 1e-10
PHASE1_TOL = 1e-9


class LpInputError(ValueError):
    """Raised when a program contains NaN/Inf coefficients or bad shapes."""


@dataclass(frozen=True)
class LinearProgram:
    """``min c.x  s.t.  A x <= b,  A_eq x = b_eq,  lower <= x <= upper``.

    ``bounds`` is a sequence of ``(lower, upper)`` pairs, ``None`` meaning
    unbounded on that side. When ``bounds`` is omitted every variable is
    nonnegative, matching the usual LP convention.
    """

    c: np.ndarray
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    bounds: Optional[Sequence[tuple]] = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        object.__setattr__(self, "c", c)
        for mat, vec in (("A", "b"), ("A_eq", "b_eq")):
            M = getattr(self, mat)
            v = getattr(self, vec)
            if M is None:
                M = np.zeros((0, n))
                v = np.zeros(0)
            M = np.atleast_2d(np.asarray(M, dtype=float))
            if M.size == 0:
                M = M.reshape(0, n)
            v = np.asarray(v, dtype=float).ravel()
            if M.shape[1] != n:
                raise LpInputError(f"{mat} has {M.shape[1]} columns, expected {n}")
            if M.shape[0] != v.size:
                raise LpInputError(f"{mat} has {M.shape[0]} rows but {vec} has {v.size} entries")
            object.__setattr__(self, mat, M)
            object.__setattr__(self, vec, v)
        if self.bounds is None:
            bounds = [(0.0, None)] * n
        else:
            bounds = [tuple(bd) for bd in self.bounds]
            if len(bounds) != n:
                raise LpInputError(f"bounds has {len(bounds)} entries, expected {n}")
        object.__setattr__(self, "bounds", tuple(bounds))

    @property
    def n(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class LpOutcome:
    """Result of :func:`solve_lp`.

    ``status`` is one of ``"optimal"``, ``"infeasible"``, ``"unbounded"``.
    For optimal outcomes ``duals`` holds one nonnegative multiplier per
    inequality row and ``duals_eq`` one free multiplier per equality row,
    so that ``c + A.T @ duals + A_eq.T @ duals_eq`` is the reduced-cost
    vector of the original variables.
    """

    status: str
    x: Optional[np.ndarray] = None
    value: Optional[float] = None
    duals: Optional[np.ndarray] = field(default=None, repr=False)
    duals_eq: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    pr = T[row]
    for i in range(T.shape[0]):
        if i != row:
            a = T[i, col]
            if a != 0.0:
                T[i] -= a * pr


def _simplex(T: np.ndarray, basis: list, n_cols: int, allowed: np.ndarray) -> str:
    """Run Bland-rule pivots on tableau ``T`` whose last row is the cost row.

    Columns ``0..n_cols-1`` are variables, the last column is the RHS. Only
    columns with ``allowed[j]`` may enter.
    """
    m = T.shape[0] - 1
    while True:
        cost = T[-1, :n_cols]
        entering = -1
        for j in range(n_cols):
            if allowed[j] and cost[j] < -COST_TOL:
                entering = j
                break
        if entering < 0:
            return "optimal"
        col = T[:m, entering]
        best_ratio = np.inf
        leaving = -1
        for i in range(m):
            if col[i] > RATIO_TOL:
                ratio = T[i, -1] / col[i]
                if ratio < best_ratio - RATIO_TOL or (
                    abs(ratio - best_ratio) <= RATIO_TOL and basis[i] < basis[leaving]
                ):
                    best_ratio = ratio
                    leaving = i
        if leaving < 0:
            return "unbounded"
        _pivot(T, leaving, entering)
        basis[leaving] = entering


def solve_lp(prog: LinearProgram) -> LpOutcome:
    """Solve ``prog`` with a dense two-phase simplex (Bland's rule).

    Returns an :class:`LpOutcome`; raises :class:`LpInputError` only on
    non-finite input.
    """
    c, A, b, Ae, be = prog.c, prog.A, prog.b, prog.A_eq, prog.b_eq
    for arr in (c, A, b, Ae, be):
        if not np.all(np.isfinite(arr)):
            raise LpInputError("linear program contains NaN or Inf")
    n = prog.n

    # Rewrite every original variable as shift + sum(sign * y_k) with y >= 0.
    shift = np.zeros(n)
    cols = []  # (orig var, sign)
    ub_rows = []  # (new column, upper - lower)
    for i, (lo, hi) in enumerate(prog.bounds):
        lo = -np.inf if lo is None else float(lo)
        hi = np.inf if hi is None else float(hi)
        if lo > hi:
            return LpOutcome("infeasible")
        if np.isfinite(lo):
            shift[i] = lo
            cols.append((i, 1.0))
            if np.isfinite(hi):
                ub_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[i] = hi
            cols.append((i, -1.0))
        else:
            cols.append((i, 1.0))
            cols.append((i, -1.0))
    k = len(cols)
    M = np.zeros((n, k))
    for j, (i, s) in enumerate(cols):
        M[i, j] = s

    A_y = A @ M
    b_y = b - A @ shift
    Ae_y = Ae @ M
    be_y = be - Ae @ shift
    if ub_rows:
        U = np.zeros((len(ub_rows), k))
        for r, (j, width) in enumerate(ub_rows):
            U[r, j] = 1.0
        A_y = np.vstack([A_y, U])
        b_y = np.concatenate([b_y, [w for _, w in ub_rows]])
    c_y = c @ M

    m_in = A_y.shape[0]
    m_eq = Ae_y.shape[0]
    m = m_in + m_eq
    # Columns: y (k), slacks (m_in), artificials (one per row needing one).
    flip = np.ones(m)
    rows = np.vstack([A_y, Ae_y]) if m else np.zeros((0, k))
    rhs = np.concatenate([b_y, be_y])
    need_art = []
    for r in range(m):
        if rhs[r] < 0:
            flip[r] = -1.0
        if r >= m_in or rhs[r] < 0:
            need_art.append(r)
    n_art = len(need_art)
    n_cols = k + m_in + n_art
    T = np.zeros((m + 1, n_cols + 1))
    basis = [-1] * m
    for r in range(m):
        T[r, :k] = flip[r] * rows[r]
        T[r, -1] = flip[r] * rhs[r]
        if r < m_in:
            T[r, k + r] = flip[r]
    for a, r in enumerate(need_art):
        T[r, k + m_in + a] = 1.0
        basis[r] = k + m_in + a
    for r in range(m_in):
        if basis[r] < 0:
            basis[r] = k + r

    allowed = np.ones(n_cols, dtype=bool)
    if n_art:
        # Phase 1: minimise the sum of artificials.
        T[-1, :] = 0.0
        for a, r in enumerate(need_art):
            T[-1, :] -= T[r, :]
            T[-1, k + m_in + a] += 1.0
        _simplex(T, basis, n_cols, allowed)
        if -T[-1, -1] > PHASE1_TOL * max(1.0, np.abs(rhs).max(initial=0.0)):
            return LpOutcome("infeasible")
        # Drive remaining artificials out of the basis; drop redundant rows.
        keep = []
        for r in range(m):
            if basis[r] >= k + m_in:
                piv = -1
                for j in range(k + m_in):
                    if abs(T[r, j]) > 1e-9:
                        piv = j
                        break
                if piv >= 0:
                    _pivot(T, r, piv)
                    basis[r] = piv
                    keep.append(r)
            else:
                keep.append(r)
        allowed[k + m_in:] = False
        dropped = [r for r in range(m) if r not in keep]
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[r] for r in keep]
    else:
        dropped = []
        keep = list(range(m))

    # Phase 2.
    cost_full = np.zeros(n_cols)
    cost_full[:k] = c_y
    T[-1, :] = 0.0
    T[-1, :n_cols] = cost_full
    for r, j in enumerate(basis):
        if T[-1, j] != 0.0:
            T[-1, :] -= T[-1, j] * T[r, :]
    status = _simplex(T, basis, n_cols, allowed)
    if status == "unbounded":
        return LpOutcome("unbounded")

    y = np.zeros(n_cols)
    for r, j in enumerate(basis):
        y[j] = T[r, -1]
    y = np.maximum(y, 0.0)
    x = shift + M @ y[:k]
    value = float(c @ x)

    # Row multipliers from the final basis: B^T w = c_B on the kept rows.
    full = np.zeros((m, n_cols))
    for r in range(m):
        full[r, :k] = flip[r] * rows[r]
        if r < m_in:
            full[r, k + r] = flip[r]
    for a, r in enumerate(need_art):
        full[r, k + m_in + a] = 1.0
    w = np.zeros(m)
    if basis:
        B = full[np.ix_(keep, basis)]
        try:
            w_keep = np.linalg.solve(B.T, cost_full[basis])
        except np.linalg.LinAlgError:
            w_keep = np.linalg.lstsq(B.T, cost_full[basis], rcond=None)[0]
        w[keep] = w_keep
    del dropped
    mult = -flip * w  # multiplier on the original (unflipped) row
    duals = mult[: A.shape[0]]
    duals_eq = mult[m_in:]
    return LpOutcome("optimal", x=x, value=value, duals=duals, duals_eq=duals_eq)
