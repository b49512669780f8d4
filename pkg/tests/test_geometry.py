import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regretlab.core import BallZ, FiniteZ, make_game
from regretlab.geometry import (
    Box,
    Ellipsoid,
    GeometryError,
    Interval,
    L2Ball,
    LpBall,
    Simplex,
    UnsupportedOperation,
    VertexPolytope,
    contains,
    equivalence_classes,
    l2_ball,
    linmin,
    lp_ball,
    modulus_of_convexity,
    orthonormal_span,
    vertices,
)
from regretlab.lp import LinearProgram, solve_lp
from regretlab.losses import Hinge, Linear
from oracles import hinge, l2_modulus, lp_norm


def test_simplex_linmin_example():
    f, v = linmin(Simplex(3), [0.5, 0.2, 0.9])
    np.testing.assert_array_equal(f, [0, 1, 0])
    assert v == pytest.approx(0.2)


def test_l2_ball_linmin_example():
    f, v = linmin(l2_ball(), [3.0, 4.0])
    np.testing.assert_allclose(f, [-0.6, -0.8])
    assert v == pytest.approx(-5.0)


def test_lp_ball_linmin_example():
    f, v = linmin(lp_ball(3.0), [1.0, 1.0])
    expected = -(2.0 ** (-1.0 / 3.0))
    np.testing.assert_allclose(f, [expected, expected], atol=1e-12)
    assert lp_norm(f, 3) == pytest.approx(1.0, abs=1e-12)
    # value is minus the dual norm with exponent 3/2
    assert v == pytest.approx(-lp_norm(np.array([1.0, 1.0]), 1.5), abs=1e-12)
    assert v == pytest.approx(-(2.0 ** (2.0 / 3.0)), abs=1e-12)


def test_zero_cost_on_ball_returns_center():
    B = L2Ball(2.0, np.array([1.0, -1.0]))
    f, v = linmin(B, [0.0, 0.0])
    np.testing.assert_array_equal(f, [1.0, -1.0])
    assert v == 0.0


def test_vertex_ties_go_to_lowest_index():
    f, _ = linmin(Simplex(3), [1.0, 1.0, 1.0])
    np.testing.assert_array_equal(f, [1, 0, 0])
    f, _ = linmin(Interval(-1, 1), [0.0])
    assert f[0] == -1


def test_dimension_mismatch():
    with pytest.raises(GeometryError):
        linmin(Simplex(3), [1.0, 2.0])


@pytest.mark.parametrize(
    "dset,f,expected",
    [
        (l2_ball(), [0.6, 0.8], True),
        (Box(np.zeros(2), np.ones(2)), [1.1, 0.0], False),
        (Simplex(2), [0.5, 0.5], True),
        (Simplex(2), [0.6, 0.5], False),
        (VertexPolytope(np.array([[0, 0], [1, 0], [0, 1.0]])), [0.25, 0.25], True),
        (VertexPolytope(np.array([[0, 0], [1, 0], [0, 1.0]])), [0.75, 0.75], False),
        (lp_ball(3.0), [1.0, 0.0], True),
    ],
)
def test_contains_examples(dset, f, expected):
    assert contains(dset, f, 1e-9) is expected


def test_contains_is_total():
    assert contains(Simplex(2), [1.0, 2.0, 3.0]) is False


def test_vertices_examples():
    np.testing.assert_array_equal(vertices(Interval(-1, 1)).ravel(), [-1, 1])
    np.testing.assert_array_equal(vertices(Simplex(3)), np.eye(3))
    assert vertices(Box(np.zeros(3), np.ones(3))).shape == (8, 3)
    with pytest.raises(UnsupportedOperation):
        vertices(l2_ball())


ALL_SETS = [
    Simplex(3),
    Box(np.array([-1.0, 0.0, 2.0]), np.array([1.0, 0.5, 3.0])),
    Interval(-2.0, 1.0),
    VertexPolytope(np.array([[0, 0], [2, 1], [1, 3], [-1, 1.0]])),
    L2Ball(1.5, np.array([0.5, -0.5])),
    LpBall(2.5, 1.0, np.zeros(3)),
    LpBall(3.0, 2.0, np.array([1.0, 1.0])),
    Ellipsoid(np.array([[2.0, 0.5], [0.5, 1.0]]), np.array([0.0, 1.0])),
]


@pytest.mark.parametrize("dset", ALL_SETS, ids=lambda s: s.kind)
def test_linmin_optimal_against_samples(dset):
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(1000, dset.dim))
    F = dset.sample(rng, 1000)
    for z, f in zip(Z, F):
        fstar, v = dset.linmin(z)
        assert v == pytest.approx(z @ fstar, abs=1e-12)
        assert v <= z @ f + 1e-9
        assert dset.contains(fstar, 1e-9)


@pytest.mark.parametrize("p", [2.0, 2.5, 3.0])
def test_lp_ball_value_identity(p):
    rng = np.random.default_rng(1)
    B = LpBall(p, 1.7, np.zeros(3))
    q = p / (p - 1.0)
    for z in rng.normal(size=(200, 3)):
        _, v = B.linmin(z)
        assert v == pytest.approx(-1.7 * lp_norm(z, q), abs=1e-9)


def test_lp_ball_rejects_out_of_range():
    with pytest.raises(GeometryError):
        LpBall(1.5, 1.0, np.zeros(2))
    with pytest.raises(GeometryError):
        LpBall(4.0, 1.0, np.zeros(2))


def test_vertex_polytope_linmin_matches_halfspace_lp():
    rng = np.random.default_rng(3)
    for _ in range(100):
        d = int(rng.integers(1, 4))
        lo = rng.uniform(-2, 0, size=d)
        hi = lo + rng.uniform(0.1, 2, size=d)
        corners = np.array(list(itertools.product(*zip(lo, hi))))
        P = VertexPolytope(corners)
        z = rng.normal(size=d)
        _, v = P.linmin(z)
        out = solve_lp(LinearProgram(c=z, bounds=list(zip(lo, hi))))
        assert v == pytest.approx(out.value, abs=1e-9)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3))
@settings(max_examples=100, deadline=None)
def test_simplex_projection_is_closest(y):
    S = Simplex(3)
    p = S.project(y)
    assert S.contains(p, 1e-9)
    rng = np.random.default_rng(0)
    for f in S.sample(rng, 50):
        assert np.linalg.norm(p - y) <= np.linalg.norm(f - y) + 1e-9


def test_lp_ball_projection_is_closest():
    B = LpBall(3.0, 1.0, np.zeros(2))
    rng = np.random.default_rng(4)
    for y in rng.normal(scale=2, size=(20, 2)):
        p = B.project(y)
        assert B.contains(p, 1e-8)
        for f in B.sample(rng, 200):
            assert np.linalg.norm(p - y) <= np.linalg.norm(f - y) + 1e-7


def test_span_drops_dependent_points():
    basis = orthonormal_span(np.array([[1.0, 0, 0], [2.0, 0, 0], [0, 1.0, 0]]))
    assert basis.shape == (2, 3)
    np.testing.assert_allclose(basis @ basis.T, np.eye(2), atol=1e-12)


def test_equivalence_full_span():
    g = make_game(Linear(), FiniteZ(np.eye(2)), Simplex(2))
    part = equivalence_classes(np.eye(2), g)
    assert part.n_classes == 2


def test_equivalence_orthogonal_difference():
    g = make_game(Linear(), FiniteZ(np.array([[1.0, 0.0]])), Box(np.zeros(2), 2 * np.ones(2)))
    part = equivalence_classes(np.array([[0.0, 1.0], [0.0, 2.0]]), g)
    assert part.n_classes == 1


def test_equivalence_hinge_witness():
    # both labels separate f = -1 from f = 1; the first separating move of Z is reported
    for order in ([1.0, -1.0], [-1.0, 1.0]):
        g = make_game(Hinge(), FiniteZ(np.array(order)[:, None]), Interval(-1, 1))
        part = equivalence_classes(np.array([[-1.0], [1.0]]), g)
        assert part.n_classes == 2
        y = part.witnesses[(0, 1)][0]
        assert y == order[0]
        assert hinge(y, -1.0) != hinge(y, 1.0)


def test_equivalence_continuous_linear_uses_span():
    g = make_game(Linear(), BallZ(np.array([3.0, 0.0]), 1.0), l2_ball())
    part = equivalence_classes(np.array([[0.1, 0.0], [0.1, 0.0], [0.0, 0.1]]), g)
    assert part.assignment == [0, 0, 1]


def test_equivalence_continuous_nonlinear_raises():
    from regretlab.core import BoxZ, LabeledZ

    g = make_game(Hinge(side_info=True), LabeledZ(BoxZ(np.array([-1.0]), np.array([1.0])), (-1, 1)),
                  Interval(-1, 1))
    with pytest.raises(GeometryError, match="finite_witness"):
        equivalence_classes(np.array([[0.0], [1.0]]), g)


def test_modulus_l2_closed_form():
    est = modulus_of_convexity(l2_ball(), 1.0)
    assert est == pytest.approx(l2_modulus(1.0), abs=1e-6)
    assert est >= l2_modulus(1.0) - 1e-12


def test_modulus_small_eps_goes_to_zero():
    assert modulus_of_convexity(l2_ball(), 1e-4) < 1e-8


def test_modulus_lp_positive_and_power_trend():
    B = lp_ball(3.0)
    eps = np.array([0.25, 0.5, 1.0])
    est = np.array([modulus_of_convexity(B, e, budget=300) for e in eps])
    assert np.all(est > 0)
    # at least q-uniform: delta(eps) / eps^3 bounded away from zero on the grid
    assert np.min(est / eps**3) > 0.01


def test_modulus_antitone_in_budget():
    B = lp_ball(2.5)
    a = modulus_of_convexity(B, 0.8, budget=50)
    b = modulus_of_convexity(B, 0.8, budget=400)
    assert b <= a + 1e-15


def test_modulus_rejects_bad_eps():
    with pytest.raises(GeometryError):
        modulus_of_convexity(l2_ball(), 0.0)
    with pytest.raises(GeometryError):
        modulus_of_convexity(l2_ball(), 2.5)
