"""Exact game values for tiny finite games, triviality and finite witnesses."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .core import FiniteZ, Game, GameError, make_game
from .geometry import Ellipsoid, Interval, L2Ball, LpBall, _VertexSet
from .lp import LinearProgram, solve_lp
from .hindsight import UnsupportedCombination, best_in_hindsight, epigraph_program, single_minima

DEFAULT_BUDGET = 10_000_000
DOMINANCE_TOL = 1e-8


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class FiniteGame:
    """Finite Z, a finite grid of F and the loss table ``table[i, j] = l(z_i, f_j)``."""

    Z: np.ndarray
    grid: np.ndarray
    table: np.ndarray

    @property
    def n_z(self) -> int:
        return self.Z.shape[0]

    @property
    def n_f(self) -> int:
        return self.grid.shape[0]


def finite_game(game: Game, grid=None, grid_size: int = 5) -> FiniteGame:
    """Tabulate ``game`` on a grid of F.

    The default grid is the vertex list for vertex-form sets; an interval gets
    ``grid_size`` evenly spaced points including both ends. Vertices are always
    added so the linear benchmark is exact.
    """
    Z = game.opponent_set
    if not Z.is_finite:
        raise GameError("exact values need a finite opponent set")
    F = game.player_set
    pts = []
    if isinstance(F, _VertexSet):
        pts.extend(F.vertices())
    if grid is not None:
        pts.extend(np.atleast_2d(np.asarray(grid, dtype=float).reshape(len(grid), -1)))
    elif isinstance(F, Interval):
        pts.extend(np.linspace(F.a, F.b, grid_size)[:, None])
    elif not isinstance(F, _VertexSet):
        raise GameError(f"{F.kind} needs an explicit grid")
    uniq = []
    for p in pts:
        if not F.contains(p):
            raise GameError(f"grid point {p} is outside F")
        if not any(np.array_equal(p, q) for q in uniq):
            uniq.append(np.asarray(p, dtype=float))
    if isinstance(F, Interval):
        uniq.sort(key=lambda p: p[0])
    G = np.array(uniq)
    table = np.array([[game.loss.evaluate(z, f) for f in G] for z in Z.points])
    if not np.all(np.isfinite(table)):
        raise GameError("loss table has non-finite entries")
    return FiniteGame(Z.points.copy(), G, table)


def _compositions(total: int, parts: int):
    """All count vectors with ``parts`` entries summing to ``total``."""
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def exact_value(fg: FiniteGame, T: int, budget: int = DEFAULT_BUDGET) -> float:
    """Minimax regret ``R_T`` by backward induction over count vectors.

    The remaining game after any history depends on it only through the
    multiset of opponent moves, since the player's past losses enter additively.
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    if T == 0:
        return 0.0
    nz, nf = fg.n_z, fg.n_f
    states = math.comb(T + nz, nz)
    cost = states * nz * nf
    if cost > budget:
        raise BudgetExceeded(f"needs about {cost} node evaluations, budget is {budget}")
    L = fg.table
    level = {c: -float(np.min(np.asarray(c, dtype=float) @ L)) for c in _compositions(T, nz)}
    for t in range(T - 1, -1, -1):
        nxt = level
        level = {}
        for c in _compositions(t, nz):
            child = np.empty(nz)
            for i in range(nz):
                cc = list(c)
                cc[i] += 1
                child[i] = nxt[tuple(cc)]
            level[c] = float(np.min(np.max(L + child[:, None], axis=0)))
    return level[(0,) * nz]


@dataclass
class TrivialityVerdict:
    """Either ``trivial`` with a dominating ``f_star`` or a witness ``(z, improving_f)``."""

    trivial: bool
    f_star: Optional[np.ndarray] = None
    witness_z: Optional[np.ndarray] = None
    improving_f: Optional[np.ndarray] = None
    violation: float = 0.0

    def __bool__(self):
        return self.trivial


def _curved_minmax(game, zs, m):
    """``min_f max_z (l(z, f) - m(z))`` over a curved F by SLSQP on the epigraph."""
    F = game.player_set
    blocks = [game.loss.blocks(z) for z in zs]
    d = F.dim
    if isinstance(F, (L2Ball, LpBall)):
        p = F.p
        cons_set = lambda f: F.radius ** p - np.sum(np.abs(f - F.center) ** p)
    elif isinstance(F, Ellipsoid):
        cons_set = lambda f: 1.0 - (f - F.center) @ F.Q @ (f - F.center)
    else:
        raise UnsupportedCombination(f"no triviality routine for {F.kind}")

    def violations(f):
        return np.array([sum(np.max(G @ f + h) for G, h in bl) for bl in blocks]) - m

    best = None
    for f0 in [F.default_point()] + [F.linmin(-np.eye(d)[i])[0] for i in range(d)]:
        x0 = np.concatenate([f0, [violations(f0).max()]])
        cons = [
            {"type": "ineq", "fun": lambda x: x[-1] - violations(x[:-1])},
            {"type": "ineq", "fun": lambda x: cons_set(x[:-1])},
        ]
        res = minimize(lambda x: x[-1], x0, constraints=cons, method="SLSQP",
                       options={"ftol": 1e-14, "maxiter": 500})
        f = res.x[:-1]
        v = violations(f).max()
        if best is None or v < best[1]:
            best = (f, v)
    return best


def _curved_minimum(game, z):
    F = game.player_set
    if game.loss.is_linear:
        return F.linmin(z)
    f, v = _curved_minmax(game, [z], np.zeros(1))
    return f, float(v)


def is_trivial(game: Game) -> TrivialityVerdict:
    """Decide whether one move is optimal against every point of a finite Z.

    Solves ``min_f max_z (l(z, f) - m(z))``; a value within ``1e-8`` of zero
    means trivial. Otherwise the witness is found by taking the minimiser for
    the first point of Z and reporting the first point it fails on, together
    with that point's own minimiser.
    """
    Zset = game.opponent_set
    if not Zset.is_finite:
        raise GameError("is_trivial needs a finite opponent set; see finite_witness")
    zs = Zset.points
    F = game.player_set
    curved = not isinstance(F, _VertexSet)
    if curved:
        mins = [_curved_minimum(game, z) for z in zs]
        m = np.array([v for _, v in mins])
        argmins = [f for f, _ in mins]
        if game.loss.is_linear:
            f_star = argmins[0]
            t = max(game.loss.evaluate(z, f_star) - mz for z, mz in zip(zs, m))
        else:
            f_star, t = _curved_minmax(game, zs, m)
    else:
        m = single_minima(game, zs)
        argmins = [None] * len(zs)
        prog = epigraph_program(game, zs)
        n = prog.n + 1
        c = np.zeros(n)
        c[-1] = 1.0
        A = np.hstack([prog.A, np.zeros((prog.A.shape[0], 1))])
        rows = []
        for i in range(len(zs)):
            r = np.concatenate([prog.loss_row(i), [-1.0]])
            rows.append(r)
        A = np.vstack([A, np.array(rows)])
        b = np.concatenate([prog.b, m])
        sp = prog.space
        A_eq = np.hstack([sp.A_eq, np.zeros((sp.A_eq.shape[0], prog.n_q + 1))])
        bounds = list(sp.bounds) + [(None, None)] * (prog.n_q + 1)
        out = solve_lp(LinearProgram(c=c, A=A, b=b, A_eq=A_eq, b_eq=sp.b_eq, bounds=bounds))
        if not out.optimal:
            raise RuntimeError(f"triviality LP ended {out.status}")
        f_star = prog.point(out.x)
        t = max(game.loss.evaluate(z, f_star) - mz for z, mz in zip(zs, m))

    if t <= DOMINANCE_TOL:
        return TrivialityVerdict(True, f_star=np.asarray(f_star), violation=float(max(t, 0.0)))

    def argmin_of(i):
        if argmins[i] is None:
            argmins[i] = best_in_hindsight(game, [zs[i]])[0]
        return argmins[i]

    cand = argmin_of(0)
    viol = np.array([game.loss.evaluate(z, cand) - mz for z, mz in zip(zs, m)])
    k = int(np.argmax(viol > DOMINANCE_TOL))
    return TrivialityVerdict(
        False,
        f_star=None,
        witness_z=zs[k].copy(),
        improving_f=np.asarray(argmin_of(k)),
        violation=float(t),
    )


@dataclass
class WitnessResult:
    found: bool
    points: Optional[np.ndarray] = None
    verdict: Optional[TrivialityVerdict] = None
    best_f: Optional[np.ndarray] = None

    def __bool__(self):
        return self.found


def finite_witness(game: Game, budget: int = 200, seed: int = 0) -> WitnessResult:
    """Search for a finite subset of a continuous Z on which the game is not trivial.

    Tries the set's spanning points first, then random samples, and greedily
    drops points (front to back) while the subset stays non-trivial.
    """
    Zset = game.opponent_set
    rng = np.random.default_rng(seed)

    def verdict_on(pts):
        sub = make_game(game.loss, FiniteZ(np.array(pts)), game.player_set, probe_points=8)
        return is_trivial(sub)

    pool = [np.asarray(p, dtype=float) for p in Zset.spanning_points()]
    v = verdict_on(pool)
    samples = 0
    while v.trivial and samples < budget:
        batch = min(16, budget - samples)
        pool.extend(Zset.sample(rng, batch))
        samples += batch
        v = verdict_on(pool)
    if v.trivial:
        return WitnessResult(False, best_f=v.f_star)
    keep = list(pool)
    i = 0
    while i < len(keep):
        trial = keep[:i] + keep[i + 1:]
        if trial:
            tv = verdict_on(trial)
            if not tv.trivial:
                keep = trial
                v = tv
                continue
        i += 1
    return WitnessResult(True, points=np.array(keep), verdict=v)
