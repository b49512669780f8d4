"""Loss functions of piecewise-linear type.

Every loss here is convex in the player's move ``f``. Internally each one can
describe itself for a fixed opponent move ``z`` as a sum of "blocks",

    l(z, f) = sum_b max_j (G_b f + h_b)_j,

which is what the LP-based benchmarks and triviality checks consume. The
canonical form ``max_{x in X(z)} (C(z) f + c(z)) . x`` is the one-block case
with ``G = X C`` and ``h = X c``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .lp import LinearProgram, solve_lp

Block = Tuple[np.ndarray, np.ndarray]

DEFAULT_PATH_CAP = 100_000


class LossError(ValueError):
    pass


class UnsupportedLoss(LossError):
    pass


class InnerProblemError(LossError):
    """The two-stage recourse LP is infeasible or unbounded at ``(z, f)``."""

    def __init__(self, msg, z=None, f=None):
        super().__init__(msg)
        self.z = z
        self.f = f


def _vec(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float)).ravel()


def _key(z) -> tuple:
    return tuple(float(v) for v in _vec(z))


def blocks_value(blocks: Sequence[Block], f) -> float:
    f = _vec(f)
    return float(sum(np.max(G @ f + h) for G, h in blocks))


# ---------------------------------------------------------------------------
# canonical form


@dataclass(frozen=True)
class PwlRecord:
    C: np.ndarray
    c: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        c = _vec(self.c)
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if X.shape[0] < 1:
            raise LossError("scenario set X(z) must be non-empty")
        if C.shape[0] != c.size or X.shape[1] != c.size:
            raise LossError(
                f"inconsistent canonical record: C {C.shape}, c {c.shape}, X {X.shape}"
            )
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "X", X)

    def block(self) -> Block:
        return self.X @ self.C, self.X @ self.c


@dataclass
class CanonicalPwl:
    """Canonical piecewise-linear description, keyed by opponent move.

    ``records`` maps ``tuple(z)`` to a :class:`PwlRecord`. When ``builder`` is
    given, records for unseen ``z`` are produced on demand.
    """

    records: Dict[tuple, PwlRecord] = field(default_factory=dict)
    builder: Optional[Callable[[np.ndarray], PwlRecord]] = None

    def record(self, z) -> PwlRecord:
        k = _key(z)
        rec = self.records.get(k)
        if rec is None:
            if self.builder is None:
                raise LossError(f"no canonical record for z={k}")
            rec = self.builder(_vec(z))
        return rec

    @property
    def dim_f(self) -> Optional[int]:
        for rec in self.records.values():
            return rec.C.shape[1]
        return None


def pwl_eval(spec: CanonicalPwl, z, f, return_index: bool = False):
    """Evaluate ``max_x (C(z) f + c(z)) . x``; optionally also the maximising scenario."""
    rec = spec.record(z)
    f = _vec(f)
    if f.size != rec.C.shape[1]:
        raise LossError(f"f has dimension {f.size}, expected {rec.C.shape[1]}")
    vals = rec.X @ (rec.C @ f + rec.c)
    i = int(np.argmax(vals))
    if return_index:
        return float(vals[i]), i
    return float(vals[i])


# ---------------------------------------------------------------------------
# loss variants


class LossFunction:
    """Base class. Subclasses define :meth:`blocks` and usually :meth:`evaluate`."""

    kind: str = "abstract"
    dim_z: Optional[int] = None
    dim_f: Optional[int] = None

    @property
    def is_linear(self) -> bool:
        return False

    def blocks(self, z) -> List[Block]:
        raise UnsupportedLoss(f"{self.kind} has no piecewise-linear description")

    def evaluate(self, z, f) -> float:
        return blocks_value(self.blocks(z), f)

    def canonical(self, z) -> PwlRecord:
        raise UnsupportedLoss(f"{self.kind} has no canonical form")

    def subgradient(self, z, f) -> np.ndarray:
        """Gradient of the active piece in each block (lowest index on ties)."""
        f = _vec(f)
        g = np.zeros(f.size)
        for G, h in self.blocks(z):
            g += G[int(np.argmax(G @ f + h))]
        return g

    def breakpoints(self, z) -> np.ndarray:
        """Kinks of ``f -> l(z, f)`` for one-dimensional ``f``."""
        pts = []
        for G, h in self.blocks(z):
            if G.shape[1] != 1:
                raise LossError("breakpoints need a one-dimensional player move")
            a, b = G[:, 0], h
            for i, j in itertools.combinations(range(len(a)), 2):
                if a[i] != a[j]:
                    pts.append((b[j] - b[i]) / (a[i] - a[j]))
        return np.array(sorted(set(pts)), dtype=float)

    def check_z(self, z) -> np.ndarray:
        z = _vec(z)
        if self.dim_z is not None and z.size != self.dim_z:
            raise LossError(f"z has dimension {z.size}, expected {self.dim_z}")
        if not np.all(np.isfinite(z)):
            raise LossError("z contains non-finite entries")
        return z


@dataclass(frozen=True)
class Linear(LossFunction):
    """``l(z, f) = z . f``."""

    kind: str = field(default="linear", init=False)

    @property
    def is_linear(self) -> bool:
        return True

    def evaluate(self, z, f):
        return float(_vec(z) @ _vec(f))

    def canonical(self, z):
        z = _vec(z)
        return PwlRecord(z[None, :], np.zeros(1), np.ones((1, 1)))

    def blocks(self, z):
        return [self.canonical(z).block()]

    def subgradient(self, z, f):
        return _vec(z).copy()


def _label(y) -> float:
    y = float(y)
    if y not in (-1.0, 1.0):
        raise LossError(f"label must be -1 or +1, got {y}")
    return y


@dataclass(frozen=True)
class Hinge(LossFunction):
    """``max(0, 1 - y x.f)``.

    With ``side_info=False`` the opponent plays only the label ``y`` and
    ``f`` is a scalar (``x = 1``); otherwise ``z = (x, y)``.
    """

    side_info: bool = False
    features: int = 1
    kind: str = field(default="hinge", init=False)

    @property
    def dim_z(self):
        return self.features + 1 if self.side_info else 1

    @property
    def dim_f(self):
        return self.features if self.side_info else 1

    def _split(self, z):
        z = self.check_z(z)
        if self.side_info:
            return z[:-1], _label(z[-1])
        return np.ones(1), _label(z[0])

    def canonical(self, z):
        x, y = self._split(z)
        C = np.vstack([np.zeros((1, x.size)), x[None, :]])
        return PwlRecord(C, np.array([1.0, 0.0]), np.array([[0.0, 0.0], [1.0, -y]]))

    def blocks(self, z):
        return [self.canonical(z).block()]

    def evaluate(self, z, f):
        x, y = self._split(z)
        return float(max(0.0, 1.0 - y * (x @ _vec(f))))


@dataclass(frozen=True)
class Absolute(LossFunction):
    """``|y - x.f|``; without side information ``|z - f|`` on scalars."""

    side_info: bool = False
    features: int = 1
    kind: str = field(default="absolute", init=False)

    @property
    def dim_z(self):
        return self.features + 1 if self.side_info else 1

    @property
    def dim_f(self):
        return self.features if self.side_info else 1

    def _split(self, z):
        z = self.check_z(z)
        if self.side_info:
            return z[:-1], float(z[-1])
        return np.ones(1), float(z[0])

    def canonical(self, z):
        x, y = self._split(z)
        return PwlRecord(-x[None, :], np.array([y]), np.array([[1.0], [-1.0]]))

    def blocks(self, z):
        return [self.canonical(z).block()]

    def evaluate(self, z, f):
        x, y = self._split(z)
        return float(abs(y - x @ _vec(f)))


@dataclass(frozen=True)
class MulticlassHinge(LossFunction):
    """``max_j (1{j != y} + f_j.x - f_y.x)`` with ``f`` the stacked class vectors.

    ``z = (x, y)`` where ``y`` is a 0-based class label.
    """

    classes: int
    features: int
    kind: str = field(default="multiclass_hinge", init=False)

    def __post_init__(self):
        if self.classes < 2 or self.features < 1:
            raise LossError("multiclass hinge needs >= 2 classes and >= 1 feature")

    @property
    def dim_z(self):
        return self.features + 1

    @property
    def dim_f(self):
        return self.classes * self.features

    def _split(self, z):
        z = self.check_z(z)
        y = z[-1]
        if y != int(y) or not 0 <= y < self.classes:
            raise LossError(f"class label must be an integer in [0, {self.classes}), got {y}")
        return z[:-1], int(y)

    def canonical(self, z):
        x, y = self._split(z)
        N, m = self.classes, self.features
        C = np.zeros((N, N * m))
        for j in range(N):
            if j != y:
                C[j, j * m:(j + 1) * m] += x
                C[j, y * m:(y + 1) * m] -= x
        c = np.ones(N)
        c[y] = 0.0
        return PwlRecord(C, c, np.eye(N))

    def blocks(self, z):
        return [self.canonical(z).block()]

    def evaluate(self, z, f):
        x, y = self._split(z)
        F = _vec(f).reshape(self.classes, self.features)
        scores = F @ x
        margins = 1.0 + scores - scores[y]
        margins[y] = 0.0
        return float(margins.max())


@dataclass(frozen=True)
class CanonicalLoss(LossFunction):
    """A loss given directly by canonical records."""

    pwl: CanonicalPwl
    kind: str = field(default="canonical_pwl", init=False)

    @property
    def dim_f(self):
        return self.pwl.dim_f

    def canonical(self, z):
        return self.pwl.record(z)

    def blocks(self, z):
        return [self.canonical(z).block()]

    def evaluate(self, z, f):
        return pwl_eval(self.pwl, z, f)


@dataclass(frozen=True)
class TwoStageSpec:
    """``c1.f + min {c2.x : A f + B x <= z, x within bounds}``."""

    c1: np.ndarray
    c2: np.ndarray
    A: np.ndarray
    B: np.ndarray
    x_bounds: Optional[Tuple[tuple, ...]] = None

    def __post_init__(self):
        c1, c2 = _vec(self.c1), _vec(self.c2)
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape[1] != c1.size:
            raise LossError("A must have one column per first-stage variable")
        if B.shape[1] != c2.size:
            raise LossError("B must have one column per second-stage variable")
        if A.shape[0] != B.shape[0]:
            raise LossError("A and B must have the same number of rows")
        bounds = self.x_bounds
        if bounds is None:
            bounds = tuple((None, None) for _ in range(c2.size))
        else:
            bounds = tuple(tuple(b) for b in bounds)
            if len(bounds) != c2.size:
                raise LossError("x_bounds needs one pair per second-stage variable")
        object.__setattr__(self, "c1", c1)
        object.__setattr__(self, "c2", c2)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "x_bounds", bounds)

    @property
    def free_recourse(self) -> bool:
        return all(lo is None and hi is None for lo, hi in self.x_bounds)


def two_stage_eval(spec: TwoStageSpec, z, f) -> float:
    z, f = _vec(z), _vec(f)
    rhs = z - spec.A @ f
    out = solve_lp(LinearProgram(c=spec.c2, A=spec.B, b=rhs, bounds=spec.x_bounds))
    if out.status == "infeasible":
        raise InnerProblemError(f"recourse problem infeasible at z={z}, f={f}", z, f)
    if out.status == "unbounded":
        raise InnerProblemError(f"recourse problem unbounded at z={z}, f={f}", z, f)
    return float(spec.c1 @ f + out.value)


def dual_vertices(spec: TwoStageSpec, tol: float = 1e-9) -> np.ndarray:
    """Vertices of ``{lam >= 0 : B^T lam = -c2}`` by brute-force basis enumeration.

    Exponential in the number of rows; meant for small recourse problems.
    """
    if not spec.free_recourse:
        raise UnsupportedLoss("dual vertices are only derived for free recourse variables")
    Bt = spec.B.T
    m = Bt.shape[1]
    r = np.linalg.matrix_rank(Bt)
    target = -spec.c2
    found: List[np.ndarray] = []
    for cols in itertools.combinations(range(m), r):
        sub = Bt[:, cols]
        if np.linalg.matrix_rank(sub) < r:
            continue
        sol, *_ = np.linalg.lstsq(sub, target, rcond=None)
        if np.linalg.norm(sub @ sol - target) > tol or np.any(sol < -tol):
            continue
        lam = np.zeros(m)
        lam[list(cols)] = np.maximum(sol, 0.0)
        if not any(np.allclose(lam, v, atol=tol) for v in found):
            found.append(lam)
    return np.array(found).reshape(len(found), m)


@dataclass(frozen=True)
class TwoStage(LossFunction):
    """Two-stage linear cost; the recourse LP is solved directly.

    The canonical form ``c1.f + max_lam lam.(A f - z)`` is available when the
    dual vertices are supplied (or computed with :func:`dual_vertices`).
    """

    spec: TwoStageSpec
    duals: Optional[np.ndarray] = None
    kind: str = field(default="two_stage", init=False)

    def __post_init__(self):
        if self.duals is not None:
            if not self.spec.free_recourse:
                raise LossError("supplied dual vertices require free recourse variables")
            D = np.atleast_2d(np.asarray(self.duals, dtype=float))
            if D.shape[1] != self.spec.B.shape[0]:
                raise LossError("each dual vertex needs one entry per constraint row")
            object.__setattr__(self, "duals", D)

    @property
    def dim_z(self):
        return self.spec.A.shape[0]

    @property
    def dim_f(self):
        return self.spec.A.shape[1]

    def evaluate(self, z, f):
        return two_stage_eval(self.spec, z, f)

    def canonical(self, z):
        if self.duals is None:
            raise UnsupportedLoss("two_stage canonical form needs dual vertices")
        z = self.check_z(z)
        C = np.vstack([self.spec.A, self.spec.c1[None, :]])
        c = np.concatenate([-z, [0.0]])
        X = np.hstack([self.duals, np.ones((self.duals.shape[0], 1))])
        return PwlRecord(C, c, X)

    def blocks(self, z):
        return [self.canonical(z).block()]


@dataclass(frozen=True)
class SecurityGameSpec:
    """Directed graph, patrol configurations (arc-index lists) and attackers."""

    arcs: Tuple[Tuple[str, str], ...]
    configurations: Tuple[Tuple[int, ...], ...]
    attackers: Tuple[Tuple[str, str], ...]
    path_cap: int = DEFAULT_PATH_CAP

    def __post_init__(self):
        arcs = tuple((str(u), str(v)) for u, v in self.arcs)
        confs = tuple(tuple(int(i) for i in g) for g in self.configurations)
        atts = tuple((str(s), str(t)) for s, t in self.attackers)
        if not confs:
            raise LossError("at least one patrol configuration is required")
        for g in confs:
            for i in g:
                if not 0 <= i < len(arcs):
                    raise LossError(f"configuration references unknown arc {i}")
        object.__setattr__(self, "arcs", arcs)
        object.__setattr__(self, "configurations", confs)
        object.__setattr__(self, "attackers", atts)


def parse_security_edges(text: str) -> SecurityGameSpec:
    """Parse the edge-list format.

    One ``u v`` arc per line; ``config i j ...`` lists the arc indices (0-based,
    in order of appearance) patrolled by one configuration; ``attacker s t``
    adds an attacker. ``#`` starts a comment.
    """
    arcs, confs, atts = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "config":
            try:
                confs.append(tuple(int(t) for t in tok[1:]))
            except ValueError:
                raise LossError(f"line {lineno}: config expects arc indices") from None
        elif tok[0] == "attacker":
            if len(tok) != 3:
                raise LossError(f"line {lineno}: attacker expects 'attacker s t'")
            atts.append((tok[1], tok[2]))
        elif len(tok) == 2:
            arcs.append((tok[0], tok[1]))
        else:
            raise LossError(f"line {lineno}: cannot parse {raw!r}")
    return SecurityGameSpec(tuple(arcs), tuple(confs), tuple(atts))


def interception_matrix(spec: SecurityGameSpec, source: str, sink: str) -> np.ndarray:
    """Distinct 0/1 rows ``h_pi`` (one column per configuration) over simple paths.

    ``h_pi[g] = 1`` when path ``pi`` uses at least one arc patrolled by ``g``.
    """
    import networkx as nx

    G = nx.MultiDiGraph()
    for i, (u, v) in enumerate(spec.arcs):
        G.add_edge(u, v, key=i)
    if source not in G or sink not in G or not nx.has_path(G, source, sink):
        raise LossError(f"attacker ({source}, {sink}) has no path")
    conf_sets = [set(g) for g in spec.configurations]
    rows = set()
    count = 0
    for path in nx.all_simple_edge_paths(G, source, sink):
        count += 1
        if count > spec.path_cap:
            raise LossError(
                f"more than {spec.path_cap} simple paths from {source} to {sink}; "
                "use a smaller graph"
            )
        used = {k for _, _, k in path}
        rows.add(tuple(1.0 if used & g else 0.0 for g in conf_sets))
    return np.array(sorted(rows), dtype=float)


def security_eval(spec: SecurityGameSpec, attacker, f, _H=None) -> float:
    """Attacker's best response value ``max_pi -I(pi)`` for leader mix ``f``."""
    f = _vec(f)
    if f.size != len(spec.configurations):
        raise LossError("f needs one weight per configuration")
    if f.min() < -1e-9 or abs(f.sum() - 1.0) > 1e-9:
        raise LossError("f must lie on the simplex over configurations")
    H = interception_matrix(spec, *attacker) if _H is None else _H
    return float(np.max(-(H @ f)))


class Security(LossFunction):
    """Zero-sum patrolling game; the opponent move is an attacker index."""

    kind = "stackelberg_security"
    dim_z = 1

    def __init__(self, spec: SecurityGameSpec):
        self.spec = spec
        self._H = [interception_matrix(spec, s, t) for s, t in spec.attackers]
        if not self._H:
            raise LossError("attacker catalog is empty")

    @property
    def dim_f(self):
        return len(self.spec.configurations)

    def _index(self, z) -> int:
        z = self.check_z(z)
        i = z[0]
        if i != int(i) or not 0 <= i < len(self._H):
            raise LossError(f"unknown attacker index {i}")
        return int(i)

    def evaluate(self, z, f):
        i = self._index(z)
        return security_eval(self.spec, self.spec.attackers[i], f, _H=self._H[i])

    def blocks(self, z):
        H = self._H[self._index(z)]
        return [(-H, np.zeros(H.shape[0]))]


@dataclass(frozen=True)
class CongestionSpec:
    """Per-arc affine pieces ``(slope, intercept)``; latency is their maximum."""

    slopes: Tuple[Tuple[float, ...], ...]
    intercepts: Tuple[Tuple[float, ...], ...]

    def __post_init__(self):
        s = tuple(tuple(float(v) for v in row) for row in self.slopes)
        b = tuple(tuple(float(v) for v in row) for row in self.intercepts)
        if len(s) != len(b) or not s:
            raise LossError("slopes and intercepts must list the same non-empty arcs")
        for rs, rb in zip(s, b):
            if len(rs) != len(rb) or not rs:
                raise LossError("every arc needs at least one (slope, intercept) piece")
        object.__setattr__(self, "slopes", s)
        object.__setattr__(self, "intercepts", b)

    @property
    def n_arcs(self) -> int:
        return len(self.slopes)


def congestion_eval(spec: CongestionSpec, z, f) -> float:
    z, f = _vec(z), _vec(f)
    if z.size != spec.n_arcs or f.size != spec.n_arcs:
        raise LossError("flows must have one entry per arc")
    if np.any(z < 0):
        raise LossError("external flow z must be nonnegative")
    total = 0.0
    for e in range(spec.n_arcs):
        c = np.array(spec.slopes[e])
        s = np.array(spec.intercepts[e])
        total += z[e] * float(np.max(c * (f[e] + z[e]) + s))
    return float(total)


class Congestion(LossFunction):
    """``sum_e z_e max_k (c^k_e (f_e + z_e) + s^k_e)``."""

    kind = "congestion"

    def __init__(self, spec: CongestionSpec):
        self.spec = spec

    @property
    def dim_z(self):
        return self.spec.n_arcs

    @property
    def dim_f(self):
        return self.spec.n_arcs

    def evaluate(self, z, f):
        return congestion_eval(self.spec, z, f)

    def blocks(self, z):
        z = self.check_z(z)
        if np.any(z < 0):
            raise LossError("external flow z must be nonnegative")
        E = self.spec.n_arcs
        out = []
        for e in range(E):
            c = np.array(self.spec.slopes[e])
            s = np.array(self.spec.intercepts[e])
            G = np.zeros((c.size, E))
            G[:, e] = z[e] * c
            out.append((G, z[e] * (c * z[e] + s)))
        return out


def to_canonical(loss: LossFunction, zs=None) -> CanonicalPwl:
    """Canonical description of ``loss``; records for ``zs`` are precomputed."""
    if isinstance(loss, (Security, Congestion)):
        raise UnsupportedLoss(f"{loss.kind} is evaluated natively, not in canonical form")
    if isinstance(loss, TwoStage) and loss.duals is None:
        raise UnsupportedLoss("two_stage canonical form needs dual vertices")
    if isinstance(loss, CanonicalLoss):
        return loss.pwl
    pwl = CanonicalPwl(builder=loss.canonical)
    for z in [] if zs is None else zs:
        pwl.records[_key(z)] = loss.canonical(z)
    return pwl
