"""Built-in games used by the tests, the acceptance suite and the CLI."""

from __future__ import annotations

from typing import Callable, Dict

import numpy as np

from .core import BallZ, BoxZ, FiniteZ, Game, HullZ, make_game
from .geometry import Interval, Simplex, VertexPolytope, l2_ball, lp_ball
from .losses import Hinge, Linear

# Opponent set whose convex hull has the origin on its boundary: the player's
# segment is orthogonal to the span of the first two points.
COUNTEREXAMPLE_Z = np.array(
    [[-1.0, 1.0, 0.0, 0.0], [1.0, -1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0]]
)
COUNTEREXAMPLE_F = np.array([[0.0, 0.0, 0.0, 0.0], [1.0, 1.0, -1.0, 1.0]])

BALL_CENTER = np.array([3.0, 0.0])


def _col(*xs) -> np.ndarray:
    return np.array(xs, dtype=float)[:, None]


def trivial_interval() -> Game:
    """``z f`` with ``z in {1/2, 1}`` on ``[0, 1]``: ``f = 0`` is always best."""
    return make_game(Linear(), FiniteZ(_col(0.5, 1.0)), Interval(0.0, 1.0))


def trivial_experts() -> Game:
    """Two experts where the first is never worse."""
    return make_game(Linear(), FiniteZ(np.array([[0.0, 1.0], [0.5, 1.0]])), Simplex(2))


def sign_game() -> Game:
    """``z f`` with ``z in {-1, 1}`` on ``[-1, 1]``."""
    return make_game(Linear(), FiniteZ(_col(-1.0, 1.0)), Interval(-1.0, 1.0))


def linear_interval() -> Game:
    """``z f`` with the asymmetric ``z in {-1, 2}`` on ``[-1, 1]``."""
    return make_game(Linear(), FiniteZ(_col(-1.0, 2.0)), Interval(-1.0, 1.0))


def experts() -> Game:
    """Two experts with unit-vector losses."""
    return make_game(Linear(), FiniteZ(np.eye(2)), Simplex(2))


def experts_box() -> Game:
    """Two experts with arbitrary losses in ``[0, 1]^2``."""
    return make_game(Linear(), BoxZ(np.zeros(2), np.ones(2)), Simplex(2))


def hinge() -> Game:
    """Hinge loss with labels ``y in {-1, 1}`` and no features on ``[-1, 1]``."""
    return make_game(Hinge(), FiniteZ(_col(-1.0, 1.0)), Interval(-1.0, 1.0))


def ball() -> Game:
    """Linear loss on the unit ball against ``Z = B((3, 0), 1)``."""
    return make_game(Linear(), BallZ(BALL_CENTER, 1.0), l2_ball())


def lp_ball_game(p: float) -> Game:
    return make_game(Linear(), BallZ(BALL_CENTER, 1.0), lp_ball(p))


def counterexample() -> Game:
    return make_game(Linear(), HullZ(COUNTEREXAMPLE_Z), VertexPolytope(COUNTEREXAMPLE_F))


TRIVIAL: Dict[str, Callable[[], Game]] = {
    "trivial_interval": trivial_interval,
    "trivial_experts": trivial_experts,
}

NONTRIVIAL_FINITE: Dict[str, Callable[[], Game]] = {
    "linear_interval": linear_interval,
    "experts": experts,
    "hinge": hinge,
}

BUILTIN: Dict[str, Callable[[], Game]] = {
    **TRIVIAL,
    **NONTRIVIAL_FINITE,
    "sign": sign_game,
    "experts_box": experts_box,
    "ball": ball,
    "lp_ball_3": lambda: lp_ball_game(3.0),
    "lp_ball_2_5": lambda: lp_ball_game(2.5),
    "counterexample": counterexample,
}


def builtin_game(name: str) -> Game:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise KeyError(f"unknown built-in game {name!r}; have {sorted(BUILTIN)}") from None
