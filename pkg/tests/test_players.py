import math

import numpy as np
import pytest

from regretlab.core import BallZ, FiniteZ, make_game
from regretlab.geometry import Interval, Simplex, UnsupportedOperation, l2_ball
from regretlab.hindsight import best_in_hindsight
from regretlab.losses import Hinge, Linear
from regretlab.players import (
    FTL,
    OGD,
    ConstantPlayer,
    ExpWeights,
    ExpWeightsState,
    FtlState,
    OgdState,
    expw_step,
    ftl_step,
    ogd_step,
)
from oracles import grid_minimum, hinge


def _ball_game(C=1.0):
    return make_game(Linear(), FiniteZ(np.array([[1.0, 1.0]])), l2_ball(C))


def _hinge_game():
    return make_game(Hinge(), FiniteZ(np.array([[-1.0], [1.0]])), Interval(-1, 1))


def test_ftl_ball_leader():
    g = _ball_game()
    st = FtlState(2)
    st.update([1.0, 1.0])
    np.testing.assert_allclose(ftl_step(st, g), [-math.sqrt(0.5)] * 2, atol=1e-12)


def test_ftl_hinge_history():
    g = _hinge_game()
    st = FtlState(1)
    for y in (1.0, 1.0, -1.0):
        st.update([y])
    f = ftl_step(st, g)
    x, _ = grid_minimum(lambda f: 2 * hinge(1, f) + hinge(-1, f), -1, 1)
    assert f[0] == pytest.approx(1.0)
    assert x == pytest.approx(1.0)


def test_ftl_first_round_is_default_point():
    np.testing.assert_array_equal(ftl_step(FtlState(2), _ball_game()), [0.0, 0.0])
    assert ftl_step(FtlState(1), _hinge_game())[0] == -1.0


def test_ftl_leader_is_optimal_on_history():
    g = make_game(Hinge(), FiniteZ(np.array([[-1.0], [1.0]])), Interval(-1, 1))
    rng = np.random.default_rng(0)
    p = FTL()
    p.reset(g)
    hist = []
    for _ in range(30):
        f = p.act()
        if hist:
            value = sum(hinge(y, f[0]) for y in hist)
            _, best = grid_minimum(lambda x: sum(hinge(y, x) for y in hist), -1, 1, 2001)
            assert value <= best + 1e-9
        y = float(rng.choice([-1.0, 1.0]))
        p.observe([y], f)
        hist.append(y)


def test_ftl_plays_on_boundary_of_ball():
    Z = BallZ(np.array([3.0, 0.0]), 1.0)
    g = make_game(Linear(), Z, l2_ball(2.0))
    rng = np.random.default_rng(1)
    p = FTL()
    p.reset(g)
    p.observe(Z.sample(rng, 1)[0], p.act())
    for z in Z.sample(rng, 50):
        f = p.act()
        assert np.linalg.norm(f) == pytest.approx(2.0, abs=1e-12)
        p.observe(z, f)


def test_ftl_rescaling_invariance():
    rng = np.random.default_rng(2)
    zs = rng.normal(size=(20, 2)) + np.array([2.0, 0.0])
    g = make_game(Linear(), FiniteZ(zs), l2_ball())
    g2 = make_game(Linear(), FiniteZ(3.0 * zs), l2_ball())
    a, b = FtlState(2), FtlState(2)
    for z in zs:
        a.update(z)
        b.update(3.0 * z)
        np.testing.assert_allclose(ftl_step(a, g), ftl_step(b, g2), atol=1e-12)


def test_ftl_linearize_equals_plain_on_linear_loss():
    rng = np.random.default_rng(3)
    g = make_game(Linear(), FiniteZ(np.eye(3)), Simplex(3))
    p, q = FTL(), FTL(linearize=True)
    p.reset(g)
    q.reset(g)
    for i in rng.integers(3, size=40):
        z = np.eye(3)[i]
        fp, fq = p.act(), q.act()
        np.testing.assert_array_equal(fp, fq)
        p.observe(z, fp)
        q.observe(z, fq)


def test_ftl_matches_best_in_hindsight():
    g = _hinge_game()
    st = FtlState(1)
    hist = [[1.0], [-1.0], [-1.0], [1.0], [-1.0]]
    for z in hist:
        st.update(z)
    np.testing.assert_allclose(ftl_step(st, g), best_in_hindsight(g, np.array(hist))[0])


def test_ogd_examples():
    B = l2_ball()
    st = OgdState(np.array([0.8, 0.0]), 2.0)
    np.testing.assert_allclose(ogd_step(st, [-1.0, 0.0], B, eta=0.5), [1.0, 0.0])
    st = OgdState(np.array([0.3, 0.1]), 2.0)
    np.testing.assert_array_equal(ogd_step(st, [0.0, 0.0], B, eta=0.5), [0.3, 0.1])
    st = OgdState(np.array([1.0, 0.0]), math.sqrt(2))
    np.testing.assert_allclose(ogd_step(st, [1.0, -1.0], Simplex(2), eta=0.5), [0.5, 0.5])


def test_ogd_default_step_size():
    st = OgdState(np.zeros(1), 2.0, grad_bound=1.0, t=4)
    assert st.eta() == pytest.approx(1.0)


def test_ogd_player_stays_feasible():
    g = _hinge_game()
    p = OGD()
    p.reset(g)
    rng = np.random.default_rng(4)
    for _ in range(100):
        f = p.act()
        assert g.F.contains(f)
        p.observe([float(rng.choice([-1.0, 1.0]))], f)


def test_expw_examples():
    st = ExpWeightsState(np.array([0.5, 0.5]), math.log(2))
    np.testing.assert_allclose(expw_step(st, [0.0, 1.0]), [2 / 3, 1 / 3])
    w = np.array([0.2, 0.3, 0.5])
    st = ExpWeightsState(w.copy(), 1.0)
    np.testing.assert_allclose(expw_step(st, [4.0, 4.0, 4.0]), w)
    st = ExpWeightsState(np.full(3, 1 / 3), 0.0)
    for _ in range(5):
        out = expw_step(st, [0.0, 1.0, 5.0])
    np.testing.assert_allclose(out, np.full(3, 1 / 3))


def test_expw_rejects_bad_losses():
    st = ExpWeightsState(np.array([0.5, 0.5]), 1.0)
    with pytest.raises(ValueError):
        expw_step(st, [0.0, np.inf])
    with pytest.raises(ValueError):
        expw_step(st, [0.0])


def test_expw_needs_vertex_set():
    with pytest.raises(UnsupportedOperation):
        ExpWeights().reset(_ball_game())


def test_constant_player_checks_membership():
    with pytest.raises(ValueError):
        ConstantPlayer([2.0]).reset(_hinge_game())
    p = ConstantPlayer([0.5])
    p.reset(_hinge_game())
    assert p.act()[0] == 0.5
