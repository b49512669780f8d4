"""Environment strategies, including the lower-bound constructions.

Every adversary here ignores the player's moves, so a whole path can be drawn
up front. ``path(rng, T)`` returns exactly the moves that ``T`` successive
``step(rng)`` calls would produce from the same generator state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .core import BallZ, BoxZ, Game
from .geometry import Box, Simplex, _VertexSet, equivalence_classes
from .hindsight import best_in_hindsight, epigraph_program, single_minima

PROB_TOL = 1e-9
FACE_TOL = 1e-9
CLASS_TOL = 1e-7
BISECTION_STEPS = 60
BISECTION_TOL = 1e-13


class AdversaryError(ValueError):
    pass


class TrivialGameError(AdversaryError):
    pass


def _vec(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float)).ravel()


class Adversary:
    """Base class. Subclasses with a finite support expose ``support`` and
    ``index_path`` so the tabular kernels can be used."""

    name = "adversary"
    horizon_free = True
    support: Optional[np.ndarray] = None

    def for_horizon(self, T: int) -> "Adversary":
        return self

    def reset(self) -> None:
        pass

    def step(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def path(self, rng: np.random.Generator, T: int) -> np.ndarray:
        return self.support[self.index_path(rng, T)]

    def index_path(self, rng: np.random.Generator, T: int) -> np.ndarray:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# i.i.d.


def check_distribution(p) -> np.ndarray:
    p = _vec(p)
    if np.any(p < -PROB_TOL) or abs(p.sum() - 1.0) > PROB_TOL:
        raise AdversaryError(f"p is not a probability vector (sum {p.sum()!r})")
    return np.maximum(p, 0.0)


def _draw_index(cum: np.ndarray, u):
    return np.minimum(np.searchsorted(cum, u, side="right"), cum.size - 1)


def iid_step(p, rng: np.random.Generator, points=None):
    """One draw from ``p``; returns the point (or the index when ``points`` is None)."""
    p = check_distribution(p)
    i = int(_draw_index(np.cumsum(p), rng.random()))
    if points is None:
        return i
    return np.atleast_2d(np.asarray(points, dtype=float).reshape(len(p), -1))[i].copy()


class IidAdversary(Adversary):
    """Independent draws, either from ``p`` over ``points`` or from a sampler."""

    name = "iid"

    def __init__(self, points=None, p=None, sampler=None):
        if (points is None) == (sampler is None):
            raise AdversaryError("give either points (with p) or a sampler")
        self.sampler = sampler
        if points is not None:
            P = np.asarray(points, dtype=float)
            if P.ndim == 1:
                P = P[:, None]
            self.support = P
            self.p = check_distribution(np.full(len(P), 1.0 / len(P)) if p is None else p)
            if self.p.size != len(P):
                raise AdversaryError("p needs one entry per point")
            self._cum = np.cumsum(self.p)

    def step(self, rng):
        if self.sampler is not None:
            return self.sampler.sample(rng, 1)[0]
        return self.support[int(_draw_index(self._cum, rng.random()))].copy()

    def index_path(self, rng, T):
        if self.sampler is not None:
            raise AdversaryError("sampler-based adversaries have no finite support")
        return _draw_index(self._cum, rng.random(T)).astype(np.int64)

    def path(self, rng, T):
        if self.sampler is not None:
            return self.sampler.sample(rng, T)
        return super().path(rng, T)


# ---------------------------------------------------------------------------
# Rademacher equaliser


@dataclass
class EqualizerConfig:
    """Opponent ``z + sigma eps e`` with a fair sign ``sigma``.

    ``f1`` and ``f2`` both minimise ``z . f`` over F and differ along ``e``.
    """

    z: np.ndarray
    e: np.ndarray
    eps: float
    f1: Optional[np.ndarray] = None
    f2: Optional[np.ndarray] = None

    def __post_init__(self):
        self.z = _vec(self.z)
        self.e = _vec(self.e)
        if self.eps < 0:
            raise AdversaryError("eps must be nonnegative")
        if abs(np.linalg.norm(self.e) - 1.0) > 1e-9:
            raise AdversaryError("e must be a unit vector")


def validate_equalizer(cfg: EqualizerConfig, game: Game, tol: float = 1e-9) -> EqualizerConfig:
    Z, F = game.opponent_set, game.player_set
    for s in (1.0, -1.0):
        if not Z.contains(cfg.z + s * cfg.eps * cfg.e, tol):
            raise AdversaryError(f"z {'+' if s > 0 else '-'} eps e is outside Z")
    if cfg.f1 is None or cfg.f2 is None:
        raise AdversaryError("equaliser needs the certified pair (f1, f2)")
    _, best = F.linmin(cfg.z)
    for f in (cfg.f1, cfg.f2):
        if not F.contains(f, tol) or cfg.z @ f > best + tol:
            raise AdversaryError(f"{f} does not minimise z . f over F")
    if abs(cfg.e @ (cfg.f1 - cfg.f2)) <= tol:
        raise AdversaryError("f1 and f2 must differ along e")
    return cfg


def auto_equalizer(game: Game, eps: Optional[float] = None) -> EqualizerConfig:
    """Equaliser along the first edge of a simplex or box F.

    The base point ties the edge's two endpoints; ``eps`` defaults to half the
    largest amplitude that keeps ``z +- eps e`` inside Z.
    """
    F, Z = game.player_set, game.opponent_set
    d = F.dim
    if isinstance(F, Simplex):
        if d < 2:
            raise AdversaryError("simplex needs at least two vertices")
        e = np.zeros(d)
        e[0], e[1] = 1 / np.sqrt(2), -1 / np.sqrt(2)
        f1, f2 = np.eye(d)[0], np.eye(d)[1]
        if isinstance(Z, BoxZ):
            lo, hi = Z.lo, Z.hi
            v = 0.5 * (max(lo[0], lo[1]) + min(hi[0], hi[1]))
            z = hi.copy()
            z[0] = z[1] = v
            room = min(v - max(lo[0], lo[1]), min(hi[0], hi[1]) - v) * np.sqrt(2)
        elif isinstance(Z, BallZ):
            z = Z.center.copy()
            z[0] = z[1] = 0.5 * (z[0] + z[1])
            room = Z.radius - np.linalg.norm(z - Z.center)
        else:
            raise AdversaryError("automatic construction supports box or ball Z")
    elif isinstance(F, Box):
        e = np.zeros(d)
        e[0] = 1.0
        f1 = F.lo.copy()
        f2 = F.lo.copy()
        f2[0] = F.hi[0]
        if isinstance(Z, BoxZ):
            if not Z.lo[0] <= 0 <= Z.hi[0]:
                raise AdversaryError("Z must straddle 0 in the first coordinate")
            z = Z.hi.copy()
            z[0] = 0.0
            room = min(-Z.lo[0], Z.hi[0])
        elif isinstance(Z, BallZ):
            z = Z.center.copy()
            z[0] = 0.0
            room = Z.radius - np.linalg.norm(z - Z.center)
        else:
            raise AdversaryError("automatic construction supports box or ball Z")
        if np.any(z[1:] <= 0) and d > 1:
            raise AdversaryError("could not tie a box edge inside Z")
    else:
        raise AdversaryError("automatic construction supports simplex or box F only")
    if room <= 0:
        raise AdversaryError("no room for a two-sided perturbation inside Z")
    cfg = EqualizerConfig(z, e, 0.5 * room if eps is None else eps, f1, f2)
    return validate_equalizer(cfg, game)


def equalizer_step(cfg: EqualizerConfig, rng: np.random.Generator) -> np.ndarray:
    sigma = 1.0 if rng.random() < 0.5 else -1.0
    return cfg.z + sigma * cfg.eps * cfg.e


class EqualizerAdversary(Adversary):
    name = "equalizer"

    def __init__(self, cfg: EqualizerConfig):
        self.cfg = cfg
        self.support = np.array([cfg.z + cfg.eps * cfg.e, cfg.z - cfg.eps * cfg.e])

    def step(self, rng):
        return equalizer_step(self.cfg, rng)

    def index_path(self, rng, T):
        return np.where(rng.random(T) < 0.5, 0, 1).astype(np.int64)


# ---------------------------------------------------------------------------
# biased martingale adversary


def ct_sequence(T: int) -> np.ndarray:
    """``c_T = 1/T`` and ``c_{t-1} = c_t + c_t^2``, returned as ``c[0] = c_1``."""
    if T < 1:
        raise AdversaryError("T must be positive")
    c = np.empty(T)
    x = 1.0 / T
    c[T - 1] = x
    for i in range(T - 2, -1, -1):
        x = x + x * x
        c[i] = x
    return c


@dataclass
class CtAdversaryState:
    T: int
    c: np.ndarray
    z_star: np.ndarray
    alpha: float
    e: np.ndarray
    running_sum: int = 0
    t: int = 1

    @property
    def amplitude(self) -> float:
        return self.alpha * float(np.linalg.norm(self.z_star))

    def prob_plus(self) -> float:
        return 0.5 * (1.0 + self.c[self.t - 1] * self.running_sum)


def make_ct_adversary(T: int, z_star, alpha: float, e) -> CtAdversaryState:
    z_star, e = _vec(z_star), _vec(e)
    if z_star.shape != e.shape:
        raise AdversaryError("z* and e must have the same dimension")
    if abs(np.linalg.norm(e) - 1.0) > 1e-9:
        raise AdversaryError("e must be a unit vector")
    if abs(e @ z_star) > 1e-9:
        raise AdversaryError("e must be orthogonal to z*")
    if not 0.0 < alpha <= 1.0 / 32.0:
        raise AdversaryError("alpha must lie in (0, 1/32]")
    return CtAdversaryState(T, ct_sequence(T), z_star, float(alpha), e)


def ct_step(state: CtAdversaryState, rng: np.random.Generator) -> np.ndarray:
    if state.t > state.T:
        raise AdversaryError(f"horizon {state.T} already reached")
    w = 1 if rng.random() < state.prob_plus() else -1
    state.running_sum += w
    state.t += 1
    return state.z_star + (w * state.amplitude) * state.e


class CtAdversary(Adversary):
    """Horizon-dependent ±1 martingale pushed along ``e`` around ``z*``."""

    name = "ct"
    horizon_free = False

    def __init__(self, z_star, alpha: float, e, T: Optional[int] = None):
        self.z_star, self.alpha, self.e = _vec(z_star), float(alpha), _vec(e)
        make_ct_adversary(1, self.z_star, self.alpha, self.e)  # validate
        self.T = T
        self.state = None
        if T is not None:
            self.state = make_ct_adversary(T, self.z_star, self.alpha, self.e)
            a = self.state.amplitude
            self.support = np.array([self.z_star + a * self.e, self.z_star - a * self.e])

    def for_horizon(self, T):
        return CtAdversary(self.z_star, self.alpha, self.e, T)

    def reset(self):
        self.state = make_ct_adversary(self.T, self.z_star, self.alpha, self.e)

    def step(self, rng):
        return ct_step(self.state, rng)

    def signs(self, U: np.ndarray, backend=None) -> np.ndarray:
        """Martingale signs for uniform rows ``U`` of length ``T``."""
        return kernels.ct_paths(U, self.state.c, backend=backend)

    def index_path(self, rng, T):
        if T != self.T:
            raise AdversaryError(f"adversary was built for T={self.T}, asked for {T}")
        W = self.signs(rng.random(T)[None, :])[0]
        return np.where(W > 0, 0, 1).astype(np.int64)


# ---------------------------------------------------------------------------
# fixed sequence


class FixedAdversary(Adversary):
    """Plays a given sequence, cycling when it runs out."""

    name = "fixed"

    def __init__(self, sequence):
        S = np.asarray(sequence, dtype=float)
        if S.ndim == 1:
            S = S[:, None]
        if len(S) == 0:
            raise AdversaryError("fixed sequence is empty")
        self.sequence = S
        self.support = S
        self._t = 0

    def reset(self):
        self._t = 0

    def step(self, rng):
        z = self.sequence[self._t % len(self.sequence)].copy()
        self._t += 1
        return z

    def index_path(self, rng, T):
        return np.arange(T, dtype=np.int64) % len(self.sequence)


# ---------------------------------------------------------------------------
# critical alpha construction


@dataclass
class CriticalAlphaResult:
    alpha: float
    p: np.ndarray
    f_a: np.ndarray
    f_b: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    k: Optional[int] = None
    eps: Optional[float] = None
    bisection_steps: int = 0

    def adversary(self, game) -> IidAdversary:
        return IidAdversary(game.opponent_set.points, self.p)


def _expected(game, zs, p, f) -> float:
    return float(sum(pi * game.loss.evaluate(z, f) for z, pi in zip(zs, p)))


def optimal_classes(game, p, zs=None):
    """Two points of ``argmin_f E_p l(Z, f)`` in distinct classes, or ``None``.

    For each move ``z_n`` the range of ``l(z_n, f)`` over the optimal face is
    computed by LP; a range above ``CLASS_TOL`` exhibits two classes.
    """
    zs = game.opponent_set.points if zs is None else zs
    f_opt, v = best_in_hindsight(game, zs, weights=p)
    prog = epigraph_program(game, zs)
    face = np.zeros(prog.n)
    for i, pi in enumerate(p):
        face += pi * prog.loss_row(i)
    cap = v + FACE_TOL * (1.0 + abs(v))
    nu = prog.space.n
    for n, z in enumerate(zs):
        if len(game.loss.blocks(z)) != 1:
            raise AdversaryError("class detection needs single-block losses")
        lo = prog.solve(prog.loss_row(n), face, cap)
        if not lo.optimal:
            continue
        f_lo = prog.point(lo.x)
        G, h = game.loss.blocks(z)[0]
        GP = G @ prog.space.P
        for j in range(G.shape[0]):
            c = np.zeros(prog.n)
            c[:nu] = -GP[j]
            hi = prog.solve(c, face, cap)
            if not hi.optimal:
                continue
            f_hi = prog.point(hi.x)
            if game.loss.evaluate(z, f_hi) - game.loss.evaluate(z, f_lo) > CLASS_TOL:
                return f_lo, f_hi
    return None


def critical_alpha(game: Game, p1=None) -> CriticalAlphaResult:
    """Mixture ``p_alpha = (1 - alpha) p0 + alpha p1`` with two optimal classes.

    ``p0`` is uniform on Z. Unless given, ``p1`` puts mass ``1 - (N-1) eps`` on
    the first point ``z_k`` where the ``p0``-optimal move is beaten, with
    ``eps`` halved from ``(N-1) eps = 1/2`` until the beating move is strictly
    better in expectation. The breakpoint is located by bisection on whether
    the ``p0``-optimal move is still optimal.
    """
    from .minimax import is_trivial

    Zs = game.opponent_set
    if not Zs.is_finite:
        raise AdversaryError("critical_alpha needs a finite opponent set")
    if not isinstance(game.player_set, _VertexSet):
        raise AdversaryError("critical_alpha needs a vertex-form decision set")
    if is_trivial(game).trivial:
        raise TrivialGameError("game is trivial; no equalising distribution exists")
    zs = Zs.points
    N = len(zs)
    p0 = np.full(N, 1.0 / N)

    def done(alpha, p, pair, p1_, k=None, eps=None, steps=0):
        return CriticalAlphaResult(alpha, p, pair[0], pair[1], p0, p1_, k, eps, steps)

    pair = optimal_classes(game, p0, zs)
    if pair is not None:
        return done(0.0, p0, pair, p0 if p1 is None else _vec(p1))

    f_star, _ = best_in_hindsight(game, zs, weights=p0)
    m = single_minima(game, zs)
    viol = np.array([game.loss.evaluate(z, f_star) for z in zs]) - m
    k = int(np.argmax(viol > 1e-8))
    f_2star, _ = best_in_hindsight(game, [zs[k]])

    eps = None
    if p1 is None:
        if N == 1:
            raise TrivialGameError("a single opponent move is always trivial")
        eps = 0.5 / (N - 1)
        for _ in range(200):
            q = np.full(N, eps)
            q[k] = 1.0 - (N - 1) * eps
            if _expected(game, zs, q, f_2star) < _expected(game, zs, q, f_star) - 1e-12:
                break
            eps *= 0.5
        else:
            raise AdversaryError("could not find eps with a strict improvement")
        p1 = q
    else:
        p1 = check_distribution(p1)
        if p1.size != N:
            raise AdversaryError("p1 needs one entry per point of Z")

    pair = optimal_classes(game, p1, zs)
    if pair is not None:
        return done(1.0, p1, pair, p1, k, eps)

    def star_optimal(a):
        p = (1 - a) * p0 + a * p1
        _, v = best_in_hindsight(game, zs, weights=p)
        return _expected(game, zs, p, f_star) <= v + BISECTION_TOL * (1.0 + abs(v))

    if star_optimal(1.0):
        raise AdversaryError("the p0-optimal move stays optimal under p1")
    lo, hi = 0.0, 1.0
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if star_optimal(mid):
            lo = mid
        else:
            hi = mid
    for a in (lo, hi):
        p = (1 - a) * p0 + a * p1
        pair = optimal_classes(game, p, zs)
        if pair is not None:
            part = equivalence_classes(np.array(pair), game)
            if part.n_classes == 2:
                return done(a, p, pair, p1, k, eps, BISECTION_STEPS)
    raise AdversaryError(
        f"bisection ended at alpha in [{lo}, {hi}] without two certified classes"
    )


@dataclass
class Certificate:
    passed: bool
    expected_f1: float
    expected_f2: float
    minimum: float
    separating_mass: float
    message: str = ""

    def __bool__(self):
        return self.passed


def equalizing_certificate(game: Game, p, f1, f2, tol: float = 1e-6) -> Certificate:
    """Check that ``f1`` and ``f2`` are both optimal under ``p`` yet separated on its support."""
    zs = game.opponent_set.points
    p = check_distribution(p)
    f1, f2 = _vec(f1), _vec(f2)
    e1 = _expected(game, zs, p, f1)
    e2 = _expected(game, zs, p, f2)
    _, v = best_in_hindsight(game, zs, weights=p)
    diff = np.array([abs(game.loss.evaluate(z, f1) - game.loss.evaluate(z, f2)) for z in zs])
    mass = float(p[(diff > 1e-9) & (p > 0)].sum())
    msgs = []
    if abs(e1 - v) > tol:
        msgs.append(f"f1 is not optimal ({e1} vs {v})")
    if abs(e2 - v) > tol:
        msgs.append(f"f2 is not optimal ({e2} vs {v})")
    if mass <= 0:
        msgs.append("f1 and f2 incur equal losses on the whole support")
    return Certificate(not msgs, e1, e2, v, mass, "; ".join(msgs) or "ok")
