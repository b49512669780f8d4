import numpy as np
import pytest

from regretlab import kernels, suite
from regretlab.adversaries import CtAdversary, IidAdversary, ct_sequence
from regretlab.core import BallZ
from regretlab.geometry import Box, Ellipsoid, L2Ball, LpBall, Simplex, VertexPolytope
from regretlab.harness import sweep
from regretlab.players import FTL
from oracles import ftl_loop_linear

compiled = pytest.mark.skipif("compiled" not in kernels.BACKENDS, reason="extension not built")

SETS = [
    L2Ball(1.5, np.array([0.2, -0.1])),
    LpBall(3.0, 1.0, np.zeros(2)),
    LpBall(2.5, 2.0, np.array([1.0, 0.0])),
    Box(np.array([-1.0, 0.0]), np.array([1.0, 2.0])),
    Ellipsoid(np.array([[2.0, 0.3], [0.3, 1.0]]), np.zeros(2)),
    Simplex(2),
    VertexPolytope(np.array([[0.0, 0.0], [1.0, 0.5], [0.2, 1.0]])),
]


def _paths(n, T, seed=0):
    return BallZ(np.array([3.0, 0.0]), 1.0).sample(np.random.default_rng(seed), n * T).reshape(n, T, 2)


@pytest.mark.parametrize("dset", SETS, ids=lambda s: s.kind)
def test_ftl_linear_matches_loop(dset):
    Z = _paths(3, 50)
    cum, bench = kernels.ftl_linear(Z, dset, [50], backend="python")
    for i in range(3):
        assert cum[i, 0] - bench[i, 0] == pytest.approx(ftl_loop_linear(Z[i], dset.linmin), abs=1e-9)


@compiled
@pytest.mark.parametrize("dset", SETS, ids=lambda s: s.kind)
def test_ftl_linear_backends_agree(dset):
    Z = _paths(8, 200, seed=1)
    ck = [10, 50, 200]
    a = kernels.ftl_linear(Z, dset, ck, backend="python")
    b = kernels.ftl_linear(Z, dset, ck, backend="compiled")
    np.testing.assert_allclose(a[0], b[0], rtol=0, atol=1e-9)
    np.testing.assert_allclose(a[1], b[1], rtol=0, atol=1e-9)


def _ct_loop(U, c):
    W = np.empty_like(U)
    for i, row in enumerate(U):
        s = 0
        for t, u in enumerate(row):
            w = 1 if u < 0.5 * (1 + c[t] * s) else -1
            W[i, t] = w
            s += w
    return W


def test_ct_paths_python_matches_loop():
    c = ct_sequence(64)
    U = np.random.default_rng(2).random((20, 64))
    np.testing.assert_array_equal(kernels.ct_paths(U, c, backend="python"), _ct_loop(U, c))


@compiled
def test_ct_backends_agree():
    c = ct_sequence(512)
    U = np.random.default_rng(3).random((50, 512))
    Wp = kernels.ct_paths(U, c, backend="python")
    Wc = kernels.ct_paths(U, c, backend="compiled")
    np.testing.assert_array_equal(Wp, Wc)
    np.testing.assert_allclose(kernels.ct_surrogate(Wp, c, backend="python"),
                               kernels.ct_surrogate(Wp, c, backend="compiled"), atol=1e-9)


def test_ct_surrogate_by_hand():
    W = np.array([[1, -1, 1, 1]], dtype=np.int8)
    c = ct_sequence(4)
    prev = np.array([0, 1, 0, 1])
    expected = 2.0**2 / 4 - np.sum((c * prev) ** 2)
    assert kernels.ct_surrogate(W, c, backend="python")[0] == pytest.approx(expected)


def _table_loop(idx, L, ck):
    out_c, out_b = [], []
    for row in idx:
        S = np.zeros(L.shape[1])
        cum = 0.0
        cs, bs = [], []
        for t, i in enumerate(row):
            j = int(np.flatnonzero(S <= S.min() + 1e-12 * (1 + abs(S.min())))[0])
            cum += L[i, j]
            S = S + L[i]
            if t + 1 in ck:
                cs.append(cum)
                bs.append(S.min())
        out_c.append(cs)
        out_b.append(bs)
    return np.array(out_c), np.array(out_b)


def test_ftl_table_python_matches_loop():
    rng = np.random.default_rng(4)
    L = rng.uniform(-1, 1, size=(3, 5))
    idx = rng.integers(3, size=(6, 40))
    a = kernels.ftl_table(idx, L, [5, 40], backend="python")
    b = _table_loop(idx, L, [5, 40])
    np.testing.assert_allclose(a[0], b[0], atol=1e-12)
    np.testing.assert_allclose(a[1], b[1], atol=1e-12)


@compiled
def test_ftl_table_backends_agree():
    rng = np.random.default_rng(5)
    L = rng.uniform(-1, 1, size=(4, 6))
    idx = rng.integers(4, size=(10, 300))
    a = kernels.ftl_table(idx, L, [1, 100, 300], backend="python")
    b = kernels.ftl_table(idx, L, [1, 100, 300], backend="compiled")
    np.testing.assert_allclose(a[0], b[0], atol=1e-9)
    np.testing.assert_allclose(a[1], b[1], atol=1e-9)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.ct_paths(np.zeros((1, 1)), np.ones(1), backend="gpu")


FAST_CASES = [
    ("ball", lambda g: CtAdversary([3.0, 0.0], 1 / 32, [0.0, 1.0]), "linear"),
    ("ball", lambda g: IidAdversary(sampler=g.Z), "linear"),
    ("experts", lambda g: IidAdversary(g.Z.points, [0.3, 0.7]), "linear"),
    ("hinge", lambda g: IidAdversary(g.Z.points, [0.45, 0.55]), "table"),
    ("lp_ball_3", lambda g: IidAdversary(sampler=g.Z), "linear"),
]


@pytest.mark.parametrize("name,mk_adv,mode", FAST_CASES, ids=lambda x: x if isinstance(x, str) else "")
def test_fast_path_matches_generic(name, mk_adv, mode):
    g = suite.builtin_game(name)
    H = [16, 32, 64]
    fast = sweep(g, FTL(), mk_adv(g), H, trials=10, seed=3)
    slow = sweep(g, FTL(), mk_adv(g), H, trials=10, seed=3, fast=False)
    assert fast.path == mode and slow.path == "generic"
    np.testing.assert_allclose(fast.cumulative_loss, slow.cumulative_loss, atol=1e-8)
    np.testing.assert_allclose(fast.benchmark, slow.benchmark, atol=1e-8)


def test_environment_forces_fallback():
    import os
    import subprocess
    import sys

    env = dict(os.environ, REGRETLAB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import regretlab; print(regretlab.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
