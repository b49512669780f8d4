"""Acceptance criteria, one test and one PASS/FAIL line each.

Tolerances are the published ones. Criteria that do not hold for this
implementation fail here rather than being loosened.
"""

import math
import time

import numpy as np
import pytest

from regretlab import kernels, suite
from regretlab.adversaries import (
    CtAdversary,
    EqualizerAdversary,
    EqualizerConfig,
    IidAdversary,
    critical_alpha,
    ct_sequence,
    equalizing_certificate,
    validate_equalizer,
)
from regretlab.core import BallZ, HullZ, make_game
from regretlab.geometry import Interval
from regretlab.harness import fit_sweep, holder_check, monte_carlo, sweep
from regretlab.lp import LinearProgram, solve_lp
from regretlab.losses import Linear
from regretlab.core import FiniteZ
from regretlab.minimax import exact_value, finite_game
from regretlab.players import FTL
from oracles import lp_by_vertices

BALL_HORIZONS = [2**k for k in range(6, 14)]
BALL_TRIALS = 2000
CT = dict(z_star=[3.0, 0.0], alpha=1 / 32, e=[0.0, 1.0])


def _iid_adversaries():
    c = suite.BALL_CENTER
    return {
        "circle": IidAdversary(sampler=BallZ(c, 1.0, surface=True)),
        "disk": IidAdversary(sampler=BallZ(c, 1.0)),
        "two-point": IidAdversary(np.array([[3.0, 1.0], [3.0, -1.0]])),
        "four-point": IidAdversary(np.array([[2.0, 0.0], [4.0, 0.0], [3.0, 1.0], [3.0, -1.0]])),
        "segment": IidAdversary(sampler=HullZ(np.array([[3.0, -1.0], [3.0, 1.0]]))),
    }


@pytest.fixture(scope="module")
def ball_iid():
    g = suite.ball()
    out = {}
    for i, (name, adv) in enumerate(_iid_adversaries().items()):
        data = sweep(g, FTL(), adv, BALL_HORIZONS, BALL_TRIALS, seed=100 + i)
        out[name] = (data, fit_sweep(data))
    return out


def test_c1_equalizer_sqrt_growth(acceptance):
    g = suite.experts_box()
    e = np.array([1.0, -1.0]) / math.sqrt(2)
    cfg = validate_equalizer(EqualizerConfig(np.array([0.5, 0.5]), e, 0.25, np.array([1.0, 0.0]),
                                             np.array([0.0, 1.0])), g)
    t0 = time.time()
    r = fit_sweep(sweep(g, FTL(), EqualizerAdversary(cfg), [256, 1024, 4096], 200, seed=1))
    elapsed = time.time() - t0
    amp = r.mean_regret[-1] / math.sqrt(4096)
    ok = 0.4 <= r.exponent <= 0.6 and amp >= 0.2 and elapsed < 60
    acceptance("C1", ok, f"exponent {r.exponent:.3f} in [0.4, 0.6]; mean/sqrt(T) at 4096 = {amp:.3f} "
               f"(need >= 0.2); {elapsed:.1f}s")
    assert ok


def test_c2_ftl_logarithmic_on_ball(acceptance, ball_iid):
    g = suite.ball()
    t0 = time.time()
    ct = fit_sweep(sweep(g, FTL(), CtAdversary(**CT), BALL_HORIZONS, BALL_TRIALS, seed=99))
    elapsed = time.time() - t0
    results = {"ct": ct, **{k: v[1] for k, v in ball_iid.items()}}
    bad = [k for k, r in results.items() if not (r.exponent <= 0.15 and r.verdict == "logarithmic")]
    detail = "; ".join(f"{k} {r.exponent:.3f}/{r.verdict}" for k, r in results.items())
    acceptance("C2", not bad, f"exponent <= 0.15 and logarithmic verdict: {detail}"
               + (f"; failing: {', '.join(bad)}" if bad else "") + f"; ct sweep {elapsed:.1f}s")
    assert not bad


def test_c3_surrogate_identity(acceptance):
    trials, chunk = 10_000, 1000
    rows = []
    for T in (256, 1024, 4096):
        adv = CtAdversary(**CT).for_horizon(T)
        rng = np.random.default_rng(np.random.SeedSequence([3, T]))
        vals = np.concatenate([
            kernels.ct_surrogate(adv.signs(rng.random((chunk, T))), adv.state.c)
            for _ in range(trials // chunk)
        ])
        se = vals.std(ddof=1) / math.sqrt(trials)
        rows.append((T, vals.mean() / math.log(T), se / math.log(T)))
    ok = all(0.8 <= q <= 1.2 for _, q, _ in rows)
    acceptance("C3", ok, "estimate / ln T: " + ", ".join(f"T={T} {q:.3f}+-{s:.3f}" for T, q, s in rows)
               + " (need within 0.8..1.2)")
    assert ok


def test_c4_c_sequence_bounds(acceptance):
    t0 = time.time()
    c = ct_sequence(10**6)
    t = np.arange(1, 10**6 + 1, dtype=float)
    inside = bool(np.all(c >= 0) and np.all(c <= 1.0 / t))
    elapsed = time.time() - t0
    ok = inside and elapsed < 1.0
    acceptance("C4", ok, f"all c_t in [0, 1/t]: {inside}; {elapsed:.2f}s")
    assert ok


def test_c5_iid_regret_increase(acceptance, ball_iid):
    k512, k8192 = BALL_HORIZONS.index(512), BALL_HORIZONS.index(8192)
    inc = {k: d.mean()[k8192] - d.mean()[k512] for k, (d, _) in ball_iid.items()}
    ok = all(v <= 1.0 for v in inc.values())
    acceptance("C5", ok, "regret(8192) - regret(512) <= 1: "
               + ", ".join(f"{k} {v:.3f}" for k, v in inc.items()))
    assert ok


def test_c6_exact_minimax_suite(acceptance):
    msgs, ok = [], True
    for name in suite.TRIVIAL:
        g = suite.builtin_game(name)
        grid = [[0.0], [0.5], [1.0]] if name == "trivial_interval" else None
        vals = [exact_value(finite_game(g, grid=grid), T) for T in range(1, 5)]
        ok &= all(v == 0.0 for v in vals)
        msgs.append(f"{name} max |R_T| {max(map(abs, vals)):.1e}")
    fg = finite_game(suite.sign_game(), grid=[[-1.0], [0.0], [1.0]])
    r1, r2 = exact_value(fg, 1), exact_value(fg, 2)
    ok &= abs(r1 - 1) < 1e-12 and abs(r2 - 1) < 1e-12
    msgs.append(f"sign R_1={r1:g} R_2={r2:g}")
    mono = True
    for name in list(suite.NONTRIVIAL_FINITE) + ["sign"]:
        fgn = finite_game(suite.builtin_game(name))
        vals = [exact_value(fgn, T) for T in range(1, 6)]
        mono &= all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    ok &= mono
    msgs.append(f"monotone {mono}")
    hull = make_game(Linear(), FiniteZ(np.linspace(-1, 1, 5)[:, None]), Interval(-1, 1))
    gap = abs(exact_value(finite_game(suite.sign_game()), 2) - exact_value(finite_game(hull), 2))
    ok &= gap <= 0.05
    msgs.append(f"hull gap at T=2 {gap:.3g}")
    acceptance("C6", ok, "; ".join(msgs))
    assert ok


def test_c7_lp_ball_rates(acceptance):
    rows, ok = [], True
    for p, limit in ((3.0, 0.55), (2.5, 1 / 3 + 0.05)):
        g = suite.lp_ball_game(p)
        advs = {"ct": CtAdversary(**CT), "disk": IidAdversary(sampler=g.Z),
                "two-point": IidAdversary(np.array([[3.0, 1.0], [3.0, -1.0]]))}
        for name, adv in advs.items():
            r = fit_sweep(sweep(g, FTL(), adv, BALL_HORIZONS, 1000, seed=7))
            ok &= r.exponent <= limit
            rows.append(f"p={p:g} {name} {r.exponent:.3f} (<= {limit:.3f})")
    acceptance("C7", ok, "; ".join(rows))
    assert ok


def test_c8_lp_vertex_enumeration(acceptance):
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 6))
        A = np.vstack([rng.normal(size=(m, n)), np.ones((1, n))])
        b = np.concatenate([rng.uniform(0.5, 2.0, size=m), [3.0]])
        c = rng.normal(size=n)
        out = solve_lp(LinearProgram(c=c, A=A, b=b))
        worst = max(worst, abs(out.value - lp_by_vertices(c, A, b)))
    ok = worst <= 1e-9
    acceptance("C8", ok, f"max |simplex - enumeration| = {worst:.2e} over 100 LPs")
    assert ok


def test_c9_counterexample_zero_mean(acceptance):
    g = suite.counterexample()
    r = monte_carlo(g, FTL(), IidAdversary(suite.COUNTEREXAMPLE_Z[:2]), 1024, 10_000, seed=9)
    ok = abs(r.mean) <= 2 * r.stderr
    acceptance("C9", ok, f"mean {r.mean:.3g}, stderr {r.stderr:.3g}")
    assert ok


def test_c10_lipschitz_constant(acceptance):
    res = holder_check(suite.ball().F, BallZ(suite.BALL_CENTER, 1.0), q=2.0, samples=5000, seed=10)
    ok = res.max_ratio <= 0.5 + 1e-6
    acceptance("C10", ok, f"max ratio {res.max_ratio:.4f} over {res.pairs} pairs (bound 0.5)")
    assert ok


def test_c11_construction_pipeline(acceptance):
    rows, ok = [], True
    for name in suite.NONTRIVIAL_FINITE:
        g = suite.builtin_game(name)
        res = critical_alpha(g)
        cert = equalizing_certificate(g, res.p, res.f_a, res.f_b)
        r = fit_sweep(sweep(g, FTL(), res.adversary(g), [256, 512, 1024, 2048, 4096], 1000, seed=11))
        ok &= bool(cert) and r.exponent >= 0.4
        rows.append(f"{name} alpha {res.alpha:.4g} certificate {cert.passed} exponent {r.exponent:.3f}")
    acceptance("C11", ok, "; ".join(rows))
    assert ok
