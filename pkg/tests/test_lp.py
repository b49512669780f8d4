import numpy as np
import pytest

from regretlab.lp import LinearProgram, LpInputError, solve_lp
from oracles import lp_by_vertices


def test_two_variable_example():
    out = solve_lp(LinearProgram(c=[-1.0, -1.0], A=[[1.0, 1.0]], b=[1.0]))
    assert out.optimal
    assert out.value == pytest.approx(-1.0, abs=1e-12)
    assert lp_by_vertices([-1, -1], [[1, 1]], [1]) == pytest.approx(-1.0)


def test_infeasible():
    out = solve_lp(LinearProgram(c=[0.0], A=[[1.0]], b=[-1.0]))
    assert out.status == "infeasible"


def test_unbounded():
    out = solve_lp(LinearProgram(c=[-1.0]))
    assert out.status == "unbounded"


def test_nan_rejected():
    with pytest.raises(LpInputError):
        solve_lp(LinearProgram(c=[np.nan], A=[[1.0]], b=[1.0]))


def _random_bounded_lp(rng):
    n = int(rng.integers(1, 7))
    m = int(rng.integers(1, 13 - n + 1))
    A = rng.normal(size=(m, n))
    b = rng.uniform(0.5, 2.0, size=m)
    # a box row keeps the feasible region bounded
    A = np.vstack([A, np.ones((1, n))])
    b = np.concatenate([b, [3.0]])
    c = rng.normal(size=n)
    return c, A, b


def test_matches_vertex_enumeration_on_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        c, A, b = _random_bounded_lp(rng)
        out = solve_lp(LinearProgram(c=c, A=A, b=b))
        ref = lp_by_vertices(c, A, b)
        assert out.optimal
        assert out.value == pytest.approx(ref, abs=1e-9)
        assert np.all(A @ out.x <= b + 1e-8)
        assert np.all(out.x >= -1e-8)


def test_deterministic():
    rng = np.random.default_rng(5)
    c, A, b = _random_bounded_lp(rng)
    a = solve_lp(LinearProgram(c=c, A=A, b=b))
    b2 = solve_lp(LinearProgram(c=c, A=A, b=b))
    assert a.x.tobytes() == b2.x.tobytes()
    assert a.value == b2.value


def test_weak_duality_certificate():
    rng = np.random.default_rng(11)
    for _ in range(30):
        c, A, b = _random_bounded_lp(rng)
        out = solve_lp(LinearProgram(c=c, A=A, b=b))
        y = out.duals
        assert np.all(y >= -1e-9)
        reduced = c + A.T @ y
        assert np.all(reduced >= -1e-7)
        dual_value = -b @ y
        assert dual_value <= out.value + 1e-7
        assert dual_value == pytest.approx(out.value, abs=1e-7)


def test_equality_and_free_bounds():
    # min x + 2y with x + y = 1, x free in [-1, 2], y in [0, inf)
    prog = LinearProgram(c=[1.0, 2.0], A_eq=[[1.0, 1.0]], b_eq=[1.0], bounds=[(-1.0, 2.0), (0.0, None)])
    out = solve_lp(prog)
    assert out.optimal
    np.testing.assert_allclose(out.x, [1.0, 0.0], atol=1e-12)
