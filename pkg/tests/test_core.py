import numpy as np
import pytest

from regretlab.core import (
    BallZ,
    BoxZ,
    FiniteZ,
    GameError,
    HullZ,
    LabeledZ,
    RegretTrace,
    eval_loss,
    make_game,
)
from regretlab.geometry import Interval, Simplex, l2_ball
from regretlab.losses import Absolute, Hinge, Linear


def test_make_game_linear_ball():
    g = make_game(Linear(), FiniteZ(np.array([[1.0, 0.0]])), l2_ball())
    assert g.dimension_z == 2 and g.dimension_f == 2


def test_make_game_empty_z():
    with pytest.raises(GameError, match="empty"):
        make_game(Linear(), FiniteZ(np.zeros((0, 2))), l2_ball())


def test_make_game_hinge_interval():
    g = make_game(Hinge(), FiniteZ(np.array([[-1.0], [1.0]])), Interval(-1, 1))
    assert g.dimension_z == 1 and g.dimension_f == 1


def test_make_game_dimension_mismatch():
    with pytest.raises(GameError, match="dimension"):
        make_game(Linear(), FiniteZ(np.array([[1.0, 0.0, 0.0]])), l2_ball())


def test_make_game_rejects_non_convex_set():
    with pytest.raises(GameError):
        make_game(Linear(), FiniteZ(np.eye(2)), [[0.0, 0.0], [1.0, 1.0]])


def test_eval_loss_examples():
    g = make_game(Linear(), FiniteZ(np.array([[1.0, 2.0]])), l2_ball(5.0))
    assert eval_loss(g, [1.0, 2.0], [3.0, -1.0]) == 1.0
    g = make_game(Hinge(), FiniteZ(np.array([[-1.0], [1.0]])), Interval(-1, 1))
    assert eval_loss(g, [1.0], [0.5]) == pytest.approx(0.5)
    g = make_game(Absolute(), FiniteZ(np.array([[0.0]])), Interval(-1, 1))
    assert eval_loss(g, [0.0], [0.0]) == 0.0


def test_eval_loss_rejects_outside_moves():
    g = make_game(Linear(), FiniteZ(np.eye(2)), Simplex(2))
    with pytest.raises(GameError, match="outside"):
        eval_loss(g, [1.0, 0.0], [0.7, 0.7])
    with pytest.raises(GameError, match="malformed"):
        eval_loss(g, [np.nan, 0.0], [0.5, 0.5])


def test_eval_loss_deterministic():
    g = make_game(Hinge(), FiniteZ(np.array([[-1.0], [1.0]])), Interval(-1, 1))
    vals = {eval_loss(g, [-1.0], [0.3]) for _ in range(10)}
    assert len(vals) == 1


def test_opponent_sets_sample_inside():
    rng = np.random.default_rng(0)
    sets = [
        BallZ(np.array([3.0, 0.0]), 1.0),
        BoxZ(np.zeros(2), np.ones(2)),
        HullZ(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])),
        FiniteZ(np.eye(3)),
    ]
    for Z in sets:
        for z in Z.sample(rng, 200):
            assert Z.contains(z)


def test_ball_z_min_norm_and_support():
    Z = BallZ(np.array([3.0, 0.0]), 1.0)
    assert Z.min_norm() == pytest.approx(2.0)
    np.testing.assert_allclose(Z.support(np.array([0.0, 1.0])), [3.0, 1.0])


def test_labeled_z_membership():
    Z = LabeledZ(BoxZ(np.array([-1.0]), np.array([1.0])), (-1, 1))
    assert Z.contains([0.5, 1.0])
    assert not Z.contains([0.5, 0.0])


def test_regret_trace_arithmetic():
    tr = RegretTrace(2, np.zeros((2, 1)), np.zeros((2, 1)), np.array([1.0, 2.0]), 1.5)
    assert tr.cumulative_loss == 3.0
    assert tr.regret == 1.5
    assert tr.T == 2
