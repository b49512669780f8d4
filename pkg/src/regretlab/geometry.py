"""Decision sets, linear-minimisation oracles and related geometry."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .lp import LinearProgram, solve_lp

MEMBERSHIP_TOL = 1e-9
SPAN_DROP_TOL = 1e-10


class GeometryError(ValueError):
    pass


class UnsupportedOperation(GeometryError):
    pass


def _vec(x, dim: Optional[int] = None) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if dim is not None and v.size != dim:
        raise GeometryError(f"expected a point of dimension {dim}, got {v.size}")
    return v


class DecisionSet:
    """Base class for the player's compact convex decision set."""

    kind: str = "abstract"
    dim: int

    def linmin(self, z) -> Tuple[np.ndarray, float]:
        raise NotImplementedError

    def contains(self, f, tol: float = MEMBERSHIP_TOL) -> bool:
        raise NotImplementedError

    def vertices(self) -> np.ndarray:
        raise UnsupportedOperation(f"{self.kind} has infinitely many extreme points")

    def project(self, y) -> np.ndarray:
        raise UnsupportedOperation(f"Euclidean projection onto {self.kind} is not implemented")

    def default_point(self) -> np.ndarray:
        """The point played when no information is available (z = 0)."""
        return self.linmin(np.zeros(self.dim))[0]

    def diameter(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Random points of the set (not uniform in general)."""
        raise NotImplementedError

    @property
    def has_vertices(self) -> bool:
        return False


class _VertexSet(DecisionSet):
    """Sets with an explicit finite vertex list; linmin scans vertices."""

    @property
    def has_vertices(self) -> bool:
        return True

    def linmin(self, z):
        z = _vec(z, self.dim)
        V = self.vertices()
        vals = V @ z
        i = int(np.argmin(vals))
        return V[i].copy(), float(vals[i])

    def sample(self, rng, n):
        V = self.vertices()
        w = -np.log(rng.random((n, V.shape[0])))
        w /= w.sum(axis=1, keepdims=True)
        return w @ V

    def diameter(self):
        V = self.vertices()
        diff = V[:, None, :] - V[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())


@dataclass(frozen=True, eq=False)
class VertexPolytope(_VertexSet):
    """Convex hull of an explicit vertex list."""

    points: np.ndarray
    kind: str = field(default="vertex_polytope", init=False)

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.points, dtype=float))
        if V.shape[0] < 1:
            raise GeometryError("vertex_polytope needs at least one vertex")
        object.__setattr__(self, "points", V)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def vertices(self):
        return self.points.copy()

    def contains(self, f, tol=MEMBERSHIP_TOL):
        f = _vec(f, self.dim)
        V = self.points
        k, d = V.shape
        # min t  s.t.  |V^T lam - f| <= t,  lam in simplex
        c = np.zeros(k + 1)
        c[-1] = 1.0
        A = np.vstack([
            np.hstack([V.T, -np.ones((d, 1))]),
            np.hstack([-V.T, -np.ones((d, 1))]),
        ])
        b = np.concatenate([f, -f])
        A_eq = np.hstack([np.ones((1, k)), np.zeros((1, 1))])
        out = solve_lp(LinearProgram(c=c, A=A, b=b, A_eq=A_eq, b_eq=[1.0]))
        return bool(out.optimal and out.value <= tol)


@dataclass(frozen=True, eq=False)
class Simplex(_VertexSet):
    """Probability simplex in dimension ``dim``."""

    dim: int
    kind: str = field(default="simplex", init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise GeometryError("simplex dimension must be positive")

    def vertices(self):
        return np.eye(self.dim)

    def contains(self, f, tol=MEMBERSHIP_TOL):
        f = _vec(f, self.dim)
        return bool(f.min() >= -tol and abs(f.sum() - 1.0) <= tol)

    def project(self, y):
        y = _vec(y, self.dim)
        u = np.sort(y)[::-1]
        css = np.cumsum(u) - 1.0
        idx = np.arange(1, y.size + 1)
        rho = np.nonzero(u - css / idx > 0)[0][-1]
        theta = css[rho] / (rho + 1.0)
        return np.maximum(y - theta, 0.0)

    def diameter(self):
        return float(np.sqrt(2.0)) if self.dim > 1 else 0.0


@dataclass(frozen=True, eq=False)
class Box(_VertexSet):
    """Axis-aligned box ``lo <= f <= hi``."""

    lo: np.ndarray
    hi: np.ndarray
    kind: str = field(default="box", init=False)

    def __post_init__(self):
        lo, hi = _vec(self.lo), _vec(self.hi)
        if lo.shape != hi.shape:
            raise GeometryError("box bounds differ in dimension")
        if np.any(lo > hi):
            raise GeometryError("box requires lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    def vertices(self):
        return np.array(list(itertools.product(*zip(self.lo, self.hi))), dtype=float)

    def linmin(self, z):
        z = _vec(z, self.dim)
        # ties go to lo, which is also the lowest-index vertex in product order
        f = np.where(z < 0, self.hi, self.lo)
        return f, float(z @ f)

    def contains(self, f, tol=MEMBERSHIP_TOL):
        f = _vec(f, self.dim)
        return bool(np.all(f >= self.lo - tol) and np.all(f <= self.hi + tol))

    def project(self, y):
        return np.clip(_vec(y, self.dim), self.lo, self.hi)

    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))

    def sample(self, rng, n):
        return self.lo + rng.random((n, self.dim)) * (self.hi - self.lo)


@dataclass(frozen=True, eq=False)
class Interval(_VertexSet):
    a: float
    b: float
    kind: str = field(default="interval", init=False)

    def __post_init__(self):
        if self.a > self.b:
            raise GeometryError("interval requires a <= b")

    @property
    def dim(self) -> int:
        return 1

    def vertices(self):
        return np.array([[self.a], [self.b]], dtype=float)

    def linmin(self, z):
        z = _vec(z, 1)
        f = np.array([self.b if z[0] < 0 else self.a])
        return f, float(z[0] * f[0])

    def contains(self, f, tol=MEMBERSHIP_TOL):
        x = _vec(f, 1)[0]
        return bool(self.a - tol <= x <= self.b + tol)

    def project(self, y):
        return np.clip(_vec(y, 1), self.a, self.b)

    def diameter(self):
        return float(self.b - self.a)

    def sample(self, rng, n):
        return self.a + rng.random((n, 1)) * (self.b - self.a)


def _lp_norm(x: np.ndarray, p: float, axis=-1) -> np.ndarray:
    return np.sum(np.abs(x) ** p, axis=axis) ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class L2Ball(DecisionSet):
    """Euclidean ball of radius ``radius`` around ``center``."""

    radius: float
    center: np.ndarray
    kind: str = field(default="l2_ball", init=False)

    def __post_init__(self):
        if self.radius < 0:
            raise GeometryError("ball radius must be nonnegative")
        object.__setattr__(self, "center", _vec(self.center))

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def p(self) -> float:
        return 2.0

    def norm(self, x) -> np.ndarray:
        return np.linalg.norm(x, axis=-1)

    def linmin(self, z):
        z = _vec(z, self.dim)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return self.center.copy(), 0.0
        f = self.center - self.radius * z / nz
        return f, float(z @ f)

    def contains(self, f, tol=MEMBERSHIP_TOL):
        f = _vec(f, self.dim)
        return bool(np.linalg.norm(f - self.center) <= self.radius + tol)

    def project(self, y):
        y = _vec(y, self.dim)
        d = y - self.center
        n = np.linalg.norm(d)
        if n <= self.radius:
            return y
        return self.center + d * (self.radius / n)

    def diameter(self):
        return 2.0 * self.radius

    def sample(self, rng, n):
        u = _gaussians(rng, n, self.dim)
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = rng.random(n) ** (1.0 / self.dim)
        return self.center + self.radius * u * r[:, None]

    def lipschitz_constant(self, min_norm: float) -> float:
        """Lipschitz constant of ``z -> argmin_f z.f`` when ``|z| >= min_norm``.

        Uses the sensitivity bound K / (beta * min_norm) for the defining
        function ``F(f) = |f - center|^2 - radius^2`` (K = 2 radius, beta = 2).
        """
        return (2.0 * self.radius) / (2.0 * min_norm)


@dataclass(frozen=True, eq=False)
class LpBall(DecisionSet):
    """Ball of an l_p norm, restricted to ``2 <= p <= 3``."""

    p: float
    radius: float
    center: np.ndarray
    kind: str = field(default="lp_ball", init=False)

    def __post_init__(self):
        if not 2.0 <= self.p <= 3.0:
            raise GeometryError(f"lp_ball requires p in [2, 3], got {self.p}")
        if self.radius < 0:
            raise GeometryError("ball radius must be nonnegative")
        object.__setattr__(self, "center", _vec(self.center))

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def dual_exponent(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def q(self) -> float:
        """Uniform-convexity power of the norm (equal to p for p >= 2)."""
        return self.p

    def norm(self, x) -> np.ndarray:
        return _lp_norm(np.asarray(x, dtype=float), self.p)

    def linmin(self, z):
        z = _vec(z, self.dim)
        pp = self.dual_exponent
        nz = _lp_norm(z, pp)
        if nz == 0.0:
            return self.center.copy(), 0.0
        f = self.center - self.radius * np.sign(z) * np.abs(z) ** (pp - 1) / nz ** (pp - 1)
        return f, float(z @ f)

    def contains(self, f, tol=MEMBERSHIP_TOL):
        f = _vec(f, self.dim)
        return bool(_lp_norm(f - self.center, self.p) <= self.radius + tol)

    def project(self, y):
        y = _vec(y, self.dim)
        d = y - self.center
        if _lp_norm(d, self.p) <= self.radius:
            return y
        a = np.abs(d)
        p, R = self.p, self.radius

        def coords(mu):
            # solve t + mu p t^(p-1) = a coordinatewise, t in [0, a]
            lo = np.zeros_like(a)
            hi = a.copy()
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                g = mid + mu * p * mid ** (p - 1) - a
                lo = np.where(g < 0, mid, lo)
                hi = np.where(g < 0, hi, mid)
            return 0.5 * (lo + hi)

        mu_lo, mu_hi = 0.0, 1.0
        while _lp_norm(coords(mu_hi), p) > R:
            mu_hi *= 2.0
        for _ in range(100):
            mu = 0.5 * (mu_lo + mu_hi)
            if _lp_norm(coords(mu), p) > R:
                mu_lo = mu
            else:
                mu_hi = mu
        return self.center + np.sign(d) * coords(mu_hi)

    def diameter(self):
        return 2.0 * self.radius * self.dim ** (0.5 - 1.0 / self.p)

    def sample(self, rng, n):
        u = _gaussians(rng, n, self.dim)
        u /= _lp_norm(u, self.p)[:, None]
        r = rng.random(n) ** (1.0 / self.dim)
        return self.center + self.radius * u * r[:, None]


@dataclass(frozen=True, eq=False)
class Ellipsoid(DecisionSet):
    """Sublevel set ``{f : (f - c)^T Q (f - c) <= 1}`` of a strongly convex quadratic."""

    Q: np.ndarray
    center: np.ndarray
    kind: str = field(default="sublevel", init=False)

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        c = _vec(self.center)
        if Q.shape != (c.size, c.size):
            raise GeometryError("Q must be square and match the center")
        if not np.allclose(Q, Q.T):
            raise GeometryError("Q must be symmetric")
        w = np.linalg.eigvalsh(Q)
        if w.min() <= 0:
            raise GeometryError("Q must be positive definite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "_Qinv", np.linalg.inv(Q))
        object.__setattr__(self, "_eig", w)

    @property
    def dim(self) -> int:
        return self.center.size

    def linmin(self, z):
        z = _vec(z, self.dim)
        w = self._Qinv @ z
        s = float(z @ w)
        if s <= 0.0:
            return self.center.copy(), 0.0
        f = self.center - w / np.sqrt(s)
        return f, float(z @ f)

    def contains(self, f, tol=MEMBERSHIP_TOL):
        d = _vec(f, self.dim) - self.center
        return bool(d @ self.Q @ d <= 1.0 + tol)

    def diameter(self):
        return 2.0 / np.sqrt(self._eig.min())

    def sample(self, rng, n):
        u = _gaussians(rng, n, self.dim)
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = rng.random(n) ** (1.0 / self.dim)
        L = np.linalg.cholesky(self._Qinv)
        return self.center + (u * r[:, None]) @ L.T

    def lipschitz_constant(self, min_norm: float) -> float:
        # F = (f-c)^T Q (f-c) - 1: beta = 2 lam_min, sup |grad F| = 2 sqrt(lam_max)
        K = 2.0 * np.sqrt(self._eig.max())
        beta = 2.0 * self._eig.min()
        return K / (beta * min_norm)


def _gaussians(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    # Inverse-CDF normals keep every sampler on the rng.random stream.
    from scipy.special import ndtri

    u = rng.random((n, d))
    return ndtri(np.clip(u, 1e-300, 1.0))


def l2_ball(radius: float = 1.0, center=None, dim: int = 2) -> L2Ball:
    return L2Ball(radius, np.zeros(dim) if center is None else center)


def lp_ball(p: float, radius: float = 1.0, center=None, dim: int = 2) -> LpBall:
    return LpBall(p, radius, np.zeros(dim) if center is None else center)


def linmin(dset: DecisionSet, z) -> Tuple[np.ndarray, float]:
    """Minimise ``z . f`` over the set; returns ``(f*, value)``."""
    return dset.linmin(z)


def contains(dset: DecisionSet, f, tol: float = MEMBERSHIP_TOL) -> bool:
    try:
        return dset.contains(f, tol)
    except GeometryError:
        return False


def vertices(dset: DecisionSet) -> np.ndarray:
    return dset.vertices()


def orthonormal_span(points: np.ndarray, tol: float = SPAN_DROP_TOL) -> np.ndarray:
    """Orthonormal basis (rows) of ``span(points)`` by modified Gram-Schmidt."""
    basis: List[np.ndarray] = []
    for v in np.atleast_2d(np.asarray(points, dtype=float)):
        w = v.copy()
        for q in basis:
            w -= (q @ w) * q
        n = np.linalg.norm(w)
        if n > tol * max(1.0, np.linalg.norm(v)):
            basis.append(w / n)
    if not basis:
        return np.zeros((0, np.atleast_2d(points).shape[1]))
    return np.array(basis)


@dataclass
class EquivalencePartition:
    """Partition of candidate points into loss-equivalence classes.

    ``assignment[i]`` is the class of ``points[i]``; ``representatives[k]`` is
    the index of the first point of class ``k``; ``witnesses[(k, l)]`` is an
    opponent move on which classes ``k < l`` incur different losses.
    """

    points: np.ndarray
    assignment: List[int]
    representatives: List[int]
    witnesses: Dict[Tuple[int, int], np.ndarray]

    @property
    def n_classes(self) -> int:
        return len(self.representatives)

    def same_class(self, i: int, j: int) -> bool:
        return self.assignment[i] == self.assignment[j]


def equivalence_classes(points, game, tol: float = 1e-9) -> EquivalencePartition:
    """Group ``points`` by the relation ``l(z, a) == l(z, b)`` for all z in Z.

    Finite Z is checked exhaustively. For a linear loss with continuous Z the
    relation reduces to ``a - b`` being orthogonal to ``span(Z)``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    Z = game.opponent_set
    loss = game.loss
    if Z.is_finite:
        table = np.array([[loss.evaluate(z, f) for z in Z.points] for f in pts])

        def gap(i, j):
            d = np.abs(table[i] - table[j])
            k = int(np.argmax(d))
            return d[k], Z.points[k]

    elif loss.kind == "linear":
        basis = orthonormal_span(Z.spanning_points())

        def gap(i, j):
            diff = pts[i] - pts[j]
            proj = basis @ diff if basis.size else np.zeros(0)
            size = float(np.linalg.norm(proj))
            if size <= tol:
                return 0.0, None
            d = basis.T @ proj
            cands = [Z.support(d), Z.support(-d)]
            return size, max(cands, key=lambda z: abs(z @ diff))

    else:
        raise GeometryError(
            "equivalence classes for continuous Z need a linear loss; "
            "reduce Z first with minimax.finite_witness"
        )

    assignment: List[int] = []
    reps: List[int] = []
    witnesses: Dict[Tuple[int, int], np.ndarray] = {}
    for i in range(len(pts)):
        for k, r in enumerate(reps):
            if gap(i, r)[0] <= tol:
                assignment.append(k)
                break
        else:
            assignment.append(len(reps))
            reps.append(i)
    for k, l in itertools.combinations(range(len(reps)), 2):
        witnesses[(k, l)] = np.asarray(gap(reps[k], reps[l])[1])
    return EquivalencePartition(pts, assignment, reps, witnesses)


def _unit_sphere(norm, rng, n, dim):
    u = _gaussians(rng, n, dim)
    return u / norm(u)[:, None]


def modulus_of_convexity(
    dset: DecisionSet,
    eps: float,
    budget: int = 1000,
    refine_steps: int = 50,
    seed: int = 0,
) -> float:
    """Upper estimate of the modulus of convexity of the set's unit ball.

    Samples ``budget`` boundary pairs at norm-distance at least ``eps``,
    refines every pair by coordinate descent and returns the smallest
    midpoint deficit ``1 - |(f + g)/2|``. Pairs are drawn as a prefix-stable
    stream, so a larger budget never yields a larger estimate.
    """
    if not isinstance(dset, (L2Ball, LpBall)):
        raise GeometryError("modulus_of_convexity needs an l2_ball or lp_ball")
    if not 0.0 < eps <= 2.0:
        raise GeometryError("eps must lie in (0, 2]")
    norm = dset.norm
    dim = dset.dim
    rng = np.random.default_rng(seed)
    F = _unit_sphere(norm, rng, budget, dim)
    G = _unit_sphere(norm, rng, budget, dim)

    def push_apart(F, G):
        # slide g toward -f along the chord until |f - g| >= eps
        dist = norm(F - G)
        bad = dist < eps
        if not np.any(bad):
            return G
        f, g = F[bad], G[bad]
        lo = np.zeros(len(f))
        hi = np.ones(len(f))
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            h = (1 - mid)[:, None] * g - mid[:, None] * f
            h /= norm(h)[:, None]
            ok = norm(f - h) >= eps
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
        h = (1 - hi)[:, None] * g - hi[:, None] * f
        h /= norm(h)[:, None]
        G = G.copy()
        G[bad] = h
        return G

    G = push_apart(F, G)

    def objective(F, G):
        val = 1.0 - norm(0.5 * (F + G))
        return np.where(norm(F - G) >= eps, val, np.inf)

    best = objective(F, G)
    step = np.full(budget, 0.25)
    for _ in range(refine_steps):
        improved = np.zeros(budget, dtype=bool)
        for which in (0, 1):
            for j in range(dim):
                for sgn in (1.0, -1.0):
                    F2, G2 = F.copy(), G.copy()
                    tgt = F2 if which == 0 else G2
                    tgt[:, j] += sgn * step
                    tgt /= norm(tgt)[:, None]
                    val = objective(F2, G2)
                    better = val < best
                    if np.any(better):
                        F[better], G[better] = F2[better], G2[better]
                        best = np.where(better, val, best)
                        improved |= better
        step = np.where(improved, step, step * 0.5)
    return float(max(best.min(), 0.0))
