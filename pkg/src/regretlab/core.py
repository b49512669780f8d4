"""Game triples, opponent sets and run records."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtri

from .geometry import MEMBERSHIP_TOL, DecisionSet, VertexPolytope, _VertexSet
from .losses import LossError, LossFunction

PROBE_POINTS = 256
PROBE_BOUND = 1e12


class GameError(ValueError):
    pass


def _vec(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float)).ravel()


class OpponentSet:
    """The environment's move set Z.

    Samplers draw a single ``(n, k)`` block of uniforms and transform it row by
    row, so drawing ``n`` points at once or one at a time from the same
    generator gives the same points.
    """

    kind = "abstract"
    dim: int
    is_finite = False
    uniforms_per_point = 1

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.transform(rng.random((n, self.uniforms_per_point)))

    def transform(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, z, tol: float = MEMBERSHIP_TOL) -> bool:
        raise NotImplementedError

    def support(self, d) -> np.ndarray:
        """A point of Z maximising ``z . d``."""
        raise NotImplementedError

    def spanning_points(self) -> np.ndarray:
        """Finitely many points of Z with the same linear span as Z."""
        raise NotImplementedError

    def bounding_radius(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class FiniteZ(OpponentSet):
    points: np.ndarray
    kind: str = field(default="finite", init=False)

    def __post_init__(self):
        P = np.asarray(self.points, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        if P.shape[0] < 1:
            raise GameError("opponent set is empty")
        object.__setattr__(self, "points", P)

    is_finite = True

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def transform(self, U):
        idx = np.minimum((U[:, 0] * len(self)).astype(np.int64), len(self) - 1)
        return self.points[idx]

    def contains(self, z, tol=MEMBERSHIP_TOL):
        z = _vec(z)
        if z.size != self.dim:
            return False
        return bool(np.min(np.linalg.norm(self.points - z, axis=1)) <= tol)

    def index(self, z, tol=MEMBERSHIP_TOL) -> int:
        d = np.linalg.norm(self.points - _vec(z), axis=1)
        i = int(np.argmin(d))
        if d[i] > tol:
            raise GameError(f"{z} is not a point of Z")
        return i

    def support(self, d):
        return self.points[int(np.argmax(self.points @ _vec(d)))].copy()

    def spanning_points(self):
        return self.points.copy()

    def bounding_radius(self):
        return float(np.linalg.norm(self.points, axis=1).max())


@dataclass(frozen=True, eq=False)
class BallZ(OpponentSet):
    """Euclidean ball; ``surface=True`` samples its boundary sphere instead."""

    center: np.ndarray
    radius: float
    surface: bool = False
    kind: str = field(default="ball", init=False)

    def __post_init__(self):
        if self.radius < 0:
            raise GameError("ball radius must be nonnegative")
        object.__setattr__(self, "center", _vec(self.center))

    @property
    def dim(self):
        return self.center.size

    @property
    def uniforms_per_point(self):
        if self.dim == 1:
            return 1
        if self.dim == 2:
            return 1 if self.surface else 2
        return self.dim + (0 if self.surface else 1)

    def transform(self, U):
        d = self.dim
        if d == 1:
            s = 2.0 * U[:, :1] - 1.0
            if self.surface:
                s = np.where(s < 0, -1.0, 1.0)
            return self.center + self.radius * s
        if d == 2:
            ang = 2.0 * np.pi * U[:, 0]
            r = np.ones(len(U)) if self.surface else np.sqrt(U[:, 1])
            u = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        else:
            g = ndtri(np.clip(U[:, :d], 1e-300, 1.0))
            u = g / np.linalg.norm(g, axis=1, keepdims=True)
            r = np.ones(len(U)) if self.surface else U[:, d] ** (1.0 / d)
        return self.center + self.radius * u * r[:, None]

    def contains(self, z, tol=MEMBERSHIP_TOL):
        z = _vec(z)
        return bool(z.size == self.dim and np.linalg.norm(z - self.center) <= self.radius + tol)

    def support(self, d):
        d = _vec(d)
        n = np.linalg.norm(d)
        return self.center + (self.radius * d / n if n > 0 else 0.0)

    def spanning_points(self):
        pts = [self.center]
        for e in np.eye(self.dim) * self.radius:
            pts += [self.center + e, self.center - e]
        return np.array(pts)

    def bounding_radius(self):
        return float(np.linalg.norm(self.center) + self.radius)

    def min_norm(self) -> float:
        return max(0.0, float(np.linalg.norm(self.center)) - self.radius)


@dataclass(frozen=True, eq=False)
class BoxZ(OpponentSet):
    lo: np.ndarray
    hi: np.ndarray
    kind: str = field(default="box", init=False)

    def __post_init__(self):
        lo, hi = _vec(self.lo), _vec(self.hi)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise GameError("box needs matching bounds with lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    @property
    def uniforms_per_point(self):
        return self.dim

    def transform(self, U):
        return self.lo + U * (self.hi - self.lo)

    def contains(self, z, tol=MEMBERSHIP_TOL):
        z = _vec(z)
        return bool(z.size == self.dim and np.all(z >= self.lo - tol) and np.all(z <= self.hi + tol))

    def support(self, d):
        return np.where(_vec(d) > 0, self.hi, self.lo)

    def spanning_points(self):
        return _box_corners(self.lo, self.hi)

    def bounding_radius(self):
        return float(np.linalg.norm(np.maximum(np.abs(self.lo), np.abs(self.hi))))


def _box_corners(lo, hi):
    return np.array(list(itertools.product(*zip(lo, hi))), dtype=float)


@dataclass(frozen=True, eq=False)
class HullZ(OpponentSet):
    """Convex hull of finitely many points; samples Dirichlet(1) mixtures."""

    vertices: np.ndarray
    kind: str = field(default="hull", init=False)

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if V.shape[0] < 1:
            raise GameError("opponent set is empty")
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "_poly", VertexPolytope(V))

    @property
    def dim(self):
        return self.vertices.shape[1]

    @property
    def uniforms_per_point(self):
        return self.vertices.shape[0]

    def transform(self, U):
        w = -np.log(np.clip(U, 1e-300, 1.0))
        w /= w.sum(axis=1, keepdims=True)
        return w @ self.vertices

    def contains(self, z, tol=MEMBERSHIP_TOL):
        z = _vec(z)
        return z.size == self.dim and self._poly.contains(z, tol)

    def support(self, d):
        return self.vertices[int(np.argmax(self.vertices @ _vec(d)))].copy()

    def spanning_points(self):
        return self.vertices.copy()

    def bounding_radius(self):
        return float(np.linalg.norm(self.vertices, axis=1).max())


@dataclass(frozen=True, eq=False)
class LabeledZ(OpponentSet):
    """Product ``base x labels``: moves are ``(x, y)`` with ``y`` from a finite list."""

    base: OpponentSet
    labels: tuple
    kind: str = field(default="labeled", init=False)

    def __post_init__(self):
        labels = tuple(float(y) for y in self.labels)
        if not labels:
            raise GameError("label set is empty")
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self):
        return self.base.dim + 1

    @property
    def uniforms_per_point(self):
        return self.base.uniforms_per_point + 1

    def transform(self, U):
        x = self.base.transform(U[:, :-1])
        k = len(self.labels)
        idx = np.minimum((U[:, -1] * k).astype(np.int64), k - 1)
        y = np.asarray(self.labels)[idx]
        return np.hstack([x, y[:, None]])

    def contains(self, z, tol=MEMBERSHIP_TOL):
        z = _vec(z)
        if z.size != self.dim:
            return False
        return self.base.contains(z[:-1], tol) and min(abs(z[-1] - y) for y in self.labels) <= tol

    def spanning_points(self):
        return np.array([np.append(x, y) for x in self.base.spanning_points() for y in self.labels])

    def bounding_radius(self):
        return float(np.hypot(self.base.bounding_radius(), max(abs(y) for y in self.labels)))


@dataclass(frozen=True, eq=False)
class Game:
    """A validated triple ``(loss, Z, F)``."""

    loss: LossFunction
    opponent_set: OpponentSet
    player_set: DecisionSet
    dimension_z: int
    dimension_f: int

    @property
    def Z(self) -> OpponentSet:
        return self.opponent_set

    @property
    def F(self) -> DecisionSet:
        return self.player_set


def make_game(
    loss: LossFunction,
    Z: OpponentSet,
    F: DecisionSet,
    probe_points: int = PROBE_POINTS,
    probe_bound: float = PROBE_BOUND,
    seed: int = 0,
) -> Game:
    """Validate and assemble a game.

    Boundedness of the loss is spot-checked on ``probe_points`` random pairs
    (plus the finite Z points and F vertices when available).
    """
    if Z is None:
        raise GameError("opponent set is empty")
    if isinstance(Z, FiniteZ) and len(Z) == 0:
        raise GameError("opponent set is empty")
    if not isinstance(F, DecisionSet):
        raise GameError(f"player set must be a DecisionSet, got {type(F).__name__}")
    dz, df = Z.dim, F.dim
    if loss.dim_z is not None and loss.dim_z != dz:
        raise GameError(f"dimension mismatch: loss expects z in R^{loss.dim_z}, Z is in R^{dz}")
    if loss.dim_f is not None and loss.dim_f != df:
        raise GameError(f"dimension mismatch: loss expects f in R^{loss.dim_f}, F is in R^{df}")
    if loss.is_linear and dz != df:
        raise GameError(f"dimension mismatch: linear loss needs dim Z == dim F ({dz} != {df})")

    rng = np.random.default_rng(seed)
    zs = list(Z.points) if Z.is_finite else []
    zs += list(Z.sample(rng, probe_points))
    fs = list(F.vertices()) if isinstance(F, _VertexSet) and F.dim <= 10 else []
    fs += list(F.sample(rng, probe_points))
    fs.append(F.default_point())
    n = max(len(zs), len(fs))
    for i in range(n):
        z = zs[i % len(zs)]
        f = fs[i % len(fs)]
        try:
            v = loss.evaluate(z, f)
        except LossError as exc:
            raise GameError(f"loss failed on probe z={z}, f={f}: {exc}") from exc
        if not np.isfinite(v) or abs(v) > probe_bound:
            raise GameError(f"loss appears unbounded: l({z}, {f}) = {v}")
    return Game(loss, Z, F, dz, df)


def eval_loss(game: Game, z, f, tol: float = MEMBERSHIP_TOL) -> float:
    """Loss of move ``f`` against ``z`` after membership checks."""
    z = _vec(z)
    f = _vec(f)
    if z.size != game.dimension_z or not np.all(np.isfinite(z)):
        raise GameError(f"malformed opponent move {z}")
    if f.size != game.dimension_f or not game.player_set.contains(f, tol):
        raise GameError(f"player move {f} is outside F")
    v = game.loss.evaluate(z, f)
    if not np.isfinite(v):
        raise GameError(f"non-finite loss at z={z}, f={f}")
    return v


@dataclass
class RegretTrace:
    """Record of one played game."""

    horizon: int
    player_moves: np.ndarray
    opponent_moves: np.ndarray
    per_round_loss: np.ndarray
    benchmark_value: float
    benchmark_point: Optional[np.ndarray] = None

    @property
    def cumulative_loss(self) -> float:
        return float(np.sum(self.per_round_loss))

    @property
    def regret(self) -> float:
        return self.cumulative_loss - self.benchmark_value

    @property
    def T(self) -> int:
        return self.horizon
