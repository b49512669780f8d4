"""Online strategies: Follow-The-Leader and two standard baselines."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import DecisionSet, UnsupportedOperation, _VertexSet


def _vec(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float)).ravel()


class Player:
    """Protocol: ``reset(game)``, then alternate ``act()`` and ``observe(z, f)``."""

    name = "player"

    def reset(self, game) -> None:
        raise NotImplementedError

    def act(self) -> np.ndarray:
        raise NotImplementedError

    def observe(self, z, f) -> None:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Follow-The-Leader


@dataclass
class FtlState:
    """Cumulative opponent summary after ``t - 1`` rounds.

    ``total`` is the running sum of moves (used for linear losses) and
    ``counts`` the multiset of moves (used for piecewise-linear losses).
    """

    dim: int
    total: np.ndarray = None
    counts: Counter = field(default_factory=Counter)
    t: int = 1

    def __post_init__(self):
        if self.total is None:
            self.total = np.zeros(self.dim)

    def update(self, z) -> None:
        z = _vec(z)
        self.total = self.total + z
        self.counts[tuple(z)] += 1
        self.t += 1


def ftl_step(state: FtlState, game) -> np.ndarray:
    """Leader for the history in ``state``; the set's default point when empty."""
    F = game.player_set
    if game.loss.is_linear:
        return F.linmin(state.total)[0]
    if state.t == 1 or not state.counts:
        return F.default_point()
    from .hindsight import best_in_hindsight

    keys = list(state.counts)
    zs = np.array(keys, dtype=float)
    w = np.array([state.counts[k] for k in keys], dtype=float)
    return best_in_hindsight(game, zs, weights=w)[0]


class FTL(Player):
    """Follow-The-Leader.

    With ``linearize=True`` the player instead runs FTL on the linear losses
    ``y_tau . f`` where ``y_tau`` is a subgradient of ``l(z_tau, .)`` taken at
    the move ``f_tau`` actually played in round ``tau``.
    """

    name = "ftl"

    def __init__(self, linearize: bool = False):
        self.linearize = linearize
        self.state: Optional[FtlState] = None
        self.game = None

    def reset(self, game):
        self.game = game
        self.state = FtlState(game.dimension_z)
        self._grad = np.zeros(game.dimension_f)

    def act(self):
        if self.linearize:
            return self.game.player_set.linmin(self._grad)[0]
        return ftl_step(self.state, self.game)

    def observe(self, z, f):
        if self.linearize:
            self._grad = self._grad + self.game.loss.subgradient(z, f)
        self.state.update(z)


# ---------------------------------------------------------------------------
# Online gradient descent


@dataclass
class OgdState:
    f: np.ndarray
    diameter: float
    grad_bound: float = 1.0
    t: int = 1

    def eta(self) -> float:
        if self.grad_bound <= 0:
            return 0.0
        return self.diameter / (self.grad_bound * math.sqrt(self.t))


def ogd_step(state: OgdState, g, dset: DecisionSet, eta: Optional[float] = None) -> np.ndarray:
    """``f <- Proj_F(f - eta g)``; ``eta`` defaults to ``D / (G sqrt(t))``."""
    step = state.eta() if eta is None else eta
    f = dset.project(state.f - step * _vec(g))
    state.f = f
    state.t += 1
    return f


class OGD(Player):
    name = "ogd"

    def __init__(self, grad_bound: float = 1.0):
        self.grad_bound = float(grad_bound)

    def reset(self, game):
        F = game.player_set
        # fail early on sets without an exact projection
        F.project(F.default_point())
        self.game = game
        self.state = OgdState(F.default_point(), F.diameter(), self.grad_bound)

    def act(self):
        return self.state.f.copy()

    def observe(self, z, f):
        g = self.game.loss.subgradient(z, f)
        ogd_step(self.state, g, self.game.player_set)


# ---------------------------------------------------------------------------
# Exponential weights


@dataclass
class ExpWeightsState:
    weights: np.ndarray
    eta: float
    t: int = 1

    @property
    def distribution(self) -> np.ndarray:
        return self.weights / self.weights.sum()


def expw_step(state: ExpWeightsState, losses) -> np.ndarray:
    """Multiplicative update; returns the normalised weights."""
    losses = _vec(losses)
    if losses.size != state.weights.size:
        raise ValueError("need one loss per expert")
    if not np.all(np.isfinite(losses)):
        raise ValueError("expert losses must be finite")
    # shifting by the minimum keeps the update in range without changing it
    w = state.weights * np.exp(-state.eta * (losses - losses.min()))
    w /= w.sum()
    state.weights = w
    state.t += 1
    return w.copy()


class ExpWeights(Player):
    """Exponential weights over the vertices of F; plays the weighted mean."""

    name = "exp_weights"

    def __init__(self, eta: float = 0.1):
        self.eta = float(eta)

    def reset(self, game):
        F = game.player_set
        if not isinstance(F, _VertexSet):
            raise UnsupportedOperation("exponential weights needs a vertex-form decision set")
        self.game = game
        self.V = F.vertices()
        n = self.V.shape[0]
        self.state = ExpWeightsState(np.full(n, 1.0 / n), self.eta)

    def act(self):
        return self.state.distribution @ self.V

    def observe(self, z, f):
        losses = [self.game.loss.evaluate(z, v) for v in self.V]
        expw_step(self.state, losses)


class ConstantPlayer(Player):
    """Always plays the same point."""

    name = "constant"

    def __init__(self, point):
        self.point = _vec(point)

    def reset(self, game):
        if not game.player_set.contains(self.point):
            raise ValueError(f"constant move {self.point} is outside F")

    def act(self):
        return self.point.copy()

    def observe(self, z, f):
        pass
