"""Best fixed move in hindsight and the epigraph LPs behind it."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .geometry import Box, DecisionSet, Interval, Simplex, VertexPolytope
from .lp import LinearProgram, solve_lp

TIE_TOL = 1e-12


class UnsupportedCombination(ValueError):
    """No exact benchmark routine for this (loss, decision set) pair."""


def _as_rows(zs) -> np.ndarray:
    Z = np.asarray(zs, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    return Z


def aggregate(zs, weights=None):
    """Merge repeated moves; returns distinct rows and summed weights (first-seen order)."""
    Z = _as_rows(zs)
    w = np.ones(len(Z)) if weights is None else np.asarray(weights, dtype=float)
    seen = {}
    rows, ws = [], []
    for z, wi in zip(Z, w):
        k = tuple(z)
        if k in seen:
            ws[seen[k]] += wi
        else:
            seen[k] = len(rows)
            rows.append(z)
            ws.append(wi)
    return np.array(rows), np.array(ws)


@dataclass
class FSpace:
    """LP description of F: ``f = P u`` with ``u`` bounded and equality-constrained."""

    P: np.ndarray
    bounds: list
    A_eq: np.ndarray
    b_eq: np.ndarray

    @property
    def n(self) -> int:
        return self.P.shape[1]


def f_space(F: DecisionSet) -> FSpace:
    d = F.dim
    if isinstance(F, Simplex):
        return FSpace(np.eye(d), [(0.0, None)] * d, np.ones((1, d)), np.ones(1))
    if isinstance(F, Box):
        return FSpace(np.eye(d), list(zip(F.lo, F.hi)), np.zeros((0, d)), np.zeros(0))
    if isinstance(F, Interval):
        return FSpace(np.eye(1), [(F.a, F.b)], np.zeros((0, 1)), np.zeros(0))
    if isinstance(F, VertexPolytope):
        k = F.points.shape[0]
        return FSpace(F.points.T.copy(), [(0.0, None)] * k, np.ones((1, k)), np.ones(1))
    raise UnsupportedCombination(f"no polyhedral description for {F.kind}")


@dataclass
class EpigraphProgram:
    """Variables ``[u, q]``: one ``q`` per (move, block) with ``q >= G f + h``.

    ``group[i]`` lists the ``q`` indices belonging to move ``i``.
    """

    space: FSpace
    A: np.ndarray
    b: np.ndarray
    group: List[List[int]]
    n_q: int

    @property
    def n(self) -> int:
        return self.space.n + self.n_q

    def loss_row(self, i: int) -> np.ndarray:
        """Coefficients of ``l(z_i, f)`` (as a sum of its q's) over all variables."""
        r = np.zeros(self.n)
        r[[self.space.n + j for j in self.group[i]]] = 1.0
        return r

    def solve(self, c, extra_A=None, extra_b=None):
        A, b = self.A, self.b
        if extra_A is not None:
            A = np.vstack([A, np.atleast_2d(extra_A)])
            b = np.concatenate([b, np.atleast_1d(extra_b)])
        sp = self.space
        A_eq = np.hstack([sp.A_eq, np.zeros((sp.A_eq.shape[0], self.n_q))])
        bounds = list(sp.bounds) + [(None, None)] * self.n_q
        return solve_lp(LinearProgram(c=c, A=A, b=b, A_eq=A_eq, b_eq=sp.b_eq, bounds=bounds))

    def point(self, x) -> np.ndarray:
        return self.space.P @ x[: self.space.n]


def epigraph_program(game, zs) -> EpigraphProgram:
    space = f_space(game.player_set)
    rows, rhs, group = [], [], []
    blocks_per_z = [game.loss.blocks(z) for z in _as_rows(zs)]
    n_q = sum(len(bl) for bl in blocks_per_z)
    nu = space.n
    qi = 0
    for bl in blocks_per_z:
        g = []
        for G, h in bl:
            GP = G @ space.P
            for j in range(G.shape[0]):
                r = np.zeros(nu + n_q)
                r[:nu] = GP[j]
                r[nu + qi] = -1.0
                rows.append(r)
                rhs.append(-h[j])
            g.append(qi)
            qi += 1
        group.append(g)
    return EpigraphProgram(space, np.array(rows), np.array(rhs), group, n_q)


def _scan_interval(game, Z, w):
    F = game.player_set
    loss = game.loss
    cands = [F.a, F.b]
    for z in Z:
        bp = loss.breakpoints(z)
        cands.extend(bp[(bp > F.a) & (bp < F.b)])
    cands = np.unique(np.asarray(cands, dtype=float))
    vals = np.array([sum(wi * loss.evaluate(z, [x]) for z, wi in zip(Z, w)) for x in cands])
    lo = vals.min()
    i = int(np.argmax(vals <= lo + TIE_TOL * (1.0 + abs(lo))))
    return np.array([cands[i]]), float(vals[i])


def best_in_hindsight(game, zs, weights: Optional[Sequence[float]] = None):
    """``argmin_f sum_t w_t l(z_t, f)`` and its value.

    Linear losses use the set's linear-minimisation oracle; piecewise-linear
    losses on an interval use a breakpoint scan; otherwise an epigraph LP over
    a polyhedral F.
    """
    Z = _as_rows(zs)
    if len(Z) == 0:
        raise ValueError("best_in_hindsight needs a non-empty sequence")
    w = np.ones(len(Z)) if weights is None else np.asarray(weights, dtype=float)
    loss = game.loss
    F = game.player_set
    if loss.is_linear:
        return F.linmin(w @ Z)
    Z, w = aggregate(Z, w)
    if isinstance(F, Interval):
        return _scan_interval(game, Z, w)
    try:
        prog = epigraph_program(game, Z)
    except UnsupportedCombination:
        raise UnsupportedCombination(
            f"no exact benchmark for loss {loss.kind} on {F.kind}"
        ) from None
    c = np.zeros(prog.n)
    for i, wi in enumerate(w):
        c += wi * prog.loss_row(i)
    out = prog.solve(c)
    if not out.optimal:
        raise RuntimeError(f"hindsight LP ended {out.status}")
    f = prog.point(out.x)
    value = float(sum(wi * loss.evaluate(z, f) for z, wi in zip(Z, w)))
    return f, value


def single_minima(game, zs) -> np.ndarray:
    """``m(z) = min_f l(z, f)`` for each move."""
    return np.array([best_in_hindsight(game, [z])[1] for z in _as_rows(zs)])
