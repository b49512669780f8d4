"""Game loop, Monte Carlo sweeps, growth fits and argmin-sensitivity checks."""

from __future__ import annotations

import copy
import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats

from . import kernels
from .adversaries import Adversary
from .core import GameError, RegretTrace, eval_loss
from .geometry import DecisionSet, Ellipsoid, Interval, L2Ball
from .hindsight import best_in_hindsight
from .players import FTL

__all__ = [
    "RoundError",
    "run_game",
    "best_in_hindsight",
    "trial_seed",
    "SweepData",
    "sweep",
    "monte_carlo",
    "SweepResult",
    "fit_growth",
    "fit_sweep",
    "MonteCarloResult",
    "HolderResult",
    "holder_check",
    "fmt",
    "trials_csv",
    "summary_json",
    "dumps17",
]

CHUNK = 128
DEFAULT_HORIZONS = [2**k for k in range(6, 14)]


class RoundError(RuntimeError):
    """A component failed during a game; carries the 1-based round index."""

    def __init__(self, round_index: int, exc: Exception):
        super().__init__(f"round {round_index}: {type(exc).__name__}: {exc}")
        self.round_index = round_index
        self.__cause__ = exc


def run_game(game, player, adversary: Adversary, T: int, seed: int = 0) -> RegretTrace:
    """Play ``T`` rounds of the full-information protocol."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    dz, df = game.dimension_z, game.dimension_f
    if T == 0:
        return RegretTrace(0, np.zeros((0, df)), np.zeros((0, dz)), np.zeros(0), 0.0)
    rng = np.random.default_rng(seed)
    adv = adversary.for_horizon(T)
    adv.reset()
    player.reset(game)
    fs = np.empty((T, df))
    zs = np.empty((T, dz))
    losses = np.empty(T)
    for t in range(T):
        try:
            f = np.asarray(player.act(), dtype=float).reshape(df)
            z = np.asarray(adv.step(rng), dtype=float).reshape(dz)
            losses[t] = eval_loss(game, z, f)
            player.observe(z, f)
        except Exception as exc:
            raise RoundError(t + 1, exc) from exc
        fs[t], zs[t] = f, z
    f_star, bench = best_in_hindsight(game, zs)
    return RegretTrace(T, fs, zs, losses, float(bench), np.asarray(f_star))


def trial_seed(seed: int, trial: int) -> int:
    """Independent per-trial seed derived from ``(seed, trial)``."""
    ss = np.random.SeedSequence([int(seed) % 2**64, int(trial)])
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepData:
    """Per-trial results; arrays have shape ``(len(horizons), trials)``."""

    horizons: List[int]
    seeds: np.ndarray
    cumulative_loss: np.ndarray
    benchmark: np.ndarray
    path: str = "generic"

    @property
    def regret(self) -> np.ndarray:
        return self.cumulative_loss - self.benchmark

    @property
    def trials(self) -> int:
        return self.seeds.size

    def mean(self) -> np.ndarray:
        return self.regret.mean(axis=1)

    def stderr(self) -> np.ndarray:
        n = self.trials
        if n < 2:
            return np.zeros(len(self.horizons))
        return self.regret.std(axis=1, ddof=1) / math.sqrt(n)


def _fast_path(game, player, adv: Adversary) -> str:
    if not isinstance(player, FTL) or player.linearize:
        return "generic"
    if game.loss.is_linear:
        try:
            kernels.set_code(game.player_set)
            return "linear"
        except ValueError:
            return "generic"
    if isinstance(game.player_set, Interval) and adv.support is not None:
        return "table"
    return "generic"


def _interval_table(game, support):
    F = game.player_set
    cands = [F.a, F.b]
    for z in support:
        bp = game.loss.breakpoints(z)
        cands.extend(bp[(bp > F.a) & (bp < F.b)])
    cands = np.unique(np.asarray(cands, dtype=float))
    L = np.array([[game.loss.evaluate(z, [x]) for x in cands] for z in support])
    return L


def _generic_trial(game, player, adv, rng, T, checkpoints):
    Z = adv.path(rng, T)
    player.reset(game)
    cum = 0.0
    out_c, out_b = [], []
    ck = list(checkpoints)
    for t in range(T):
        f = player.act()
        cum += eval_loss(game, Z[t], f)
        player.observe(Z[t], f)
        while ck and ck[0] == t + 1:
            out_c.append(cum)
            out_b.append(best_in_hindsight(game, Z[: t + 1])[1])
            ck.pop(0)
    return out_c, out_b


def _run_block(game, player, adv, seeds, T, checkpoints, mode, backend):
    """Cumulative loss and benchmark at ``checkpoints`` for the given trial seeds."""
    n = len(seeds)
    K = len(checkpoints)
    if mode == "linear":
        Z = np.stack([adv.path(np.random.default_rng(s), T) for s in seeds])
        return kernels.ftl_linear(Z, game.player_set, checkpoints, backend=backend)
    if mode == "table":
        L = _interval_table(game, adv.support)
        idx = np.stack([adv.index_path(np.random.default_rng(s), T) for s in seeds])
        return kernels.ftl_table(idx, L, checkpoints, backend=backend)
    cum = np.zeros((n, K))
    bench = np.zeros((n, K))
    for i, s in enumerate(seeds):
        c, b = _generic_trial(game, player, adv, np.random.default_rng(s), T, checkpoints)
        cum[i], bench[i] = c, b
    return cum, bench


def sweep(
    game,
    player,
    adversary: Adversary,
    horizons: Sequence[int] = DEFAULT_HORIZONS,
    trials: int = 100,
    seed: int = 0,
    threads: int = 1,
    backend: Optional[str] = None,
    fast: bool = True,
) -> SweepData:
    """Run ``trials`` independent games at each horizon.

    Trial ``i`` uses the same derived seed at every horizon. Adversaries that
    do not depend on the horizon are played once to the largest horizon and
    read off at each checkpoint, so the horizons share their random paths.
    FTL on linear losses and on interval sets with finitely supported
    adversaries runs in the compiled kernels; anything else plays round by round.
    """
    H = [int(T) for T in horizons]
    if not H or any(T < 1 for T in H) or any(b <= a for a, b in zip(H, H[1:])):
        raise ValueError("horizons must be positive and strictly increasing")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seeds = np.array([trial_seed(seed, i) for i in range(trials)], dtype=np.uint64)
    chunks = [seeds[i : i + CHUNK] for i in range(0, trials, CHUNK)]
    cum = np.zeros((len(H), trials))
    bench = np.zeros((len(H), trials))

    if adversary.horizon_free:
        jobs = [(adversary, H[-1], list(range(len(H))), H)]
    else:
        jobs = [(adversary.for_horizon(T), T, [k], [T]) for k, T in enumerate(H)]

    mode = "generic"
    for adv, T, rows, ck in jobs:
        mode = _fast_path(game, player, adv) if fast else "generic"

        def work(chunk, adv=adv, T=T, ck=ck, mode=mode):
            # players carry state, so each chunk gets its own copy
            return _run_block(game, copy.deepcopy(player), adv, chunk, T, ck, mode, backend)

        if threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(work, chunks))
        else:
            parts = [work(c) for c in chunks]
        c = np.concatenate([p[0] for p in parts], axis=0)
        b = np.concatenate([p[1] for p in parts], axis=0)
        cum[rows] = c.T
        bench[rows] = b.T
    return SweepData(H, seeds, cum, bench, mode)


@dataclass
class MonteCarloResult:
    mean: float
    stderr: float
    regrets: np.ndarray
    seeds: np.ndarray


def monte_carlo(game, player, adversary, T: int, trials: int, seed: int = 0, **kw) -> MonteCarloResult:
    """Mean regret and its standard error over ``trials`` derived-seed games."""
    data = sweep(game, player, adversary, [T], trials, seed, **kw)
    return MonteCarloResult(float(data.mean()[0]), float(data.stderr()[0]), data.regret[0], data.seeds)


# ---------------------------------------------------------------------------
# growth fits


@dataclass
class SweepResult:
    horizons: List[int]
    mean_regret: List[float]
    stderr: List[float]
    trials: List[int]
    exponent: float
    exponent_ci: List[float]
    log_fit: List[float]
    log_residual: float
    power_residual: float
    verdict: str

    def to_dict(self) -> dict:
        return {
            "horizons": list(self.horizons),
            "mean_regret": list(self.mean_regret),
            "stderr": list(self.stderr),
            "trials": list(self.trials),
            "exponent": self.exponent,
            "exponent_ci": list(self.exponent_ci),
            "log_fit": list(self.log_fit),
            "log_residual": self.log_residual,
            "power_residual": self.power_residual,
            "verdict": self.verdict,
        }


def fit_growth(horizons, mean_regret, stderr=None, trials=None, dominance: float = 2.0) -> SweepResult:
    """Fit ``c T^beta`` and ``a + b ln T`` and pick the better one.

    ``beta`` comes from least squares on ``(ln T, ln regret)`` with a 95%
    t-interval. Both models are compared by their residual sum of squares in
    regret space; a model wins only if its residual is ``dominance`` times
    smaller. Fewer than three horizons or a non-positive mean gives
    ``inconclusive`` (and ``nan`` for the exponent when it cannot be fitted).
    """
    T = np.asarray(horizons, dtype=float)
    R = np.asarray(mean_regret, dtype=float)
    n = T.size
    se = [0.0] * n if stderr is None else [float(s) for s in stderr]
    tr = [1] * n if trials is None else [int(x) for x in trials]
    nan = float("nan")
    beta, ci, logfit, ssr_log, ssr_pow = nan, [nan, nan], [nan, nan], nan, nan
    verdict = "inconclusive"
    if n >= 2:
        X = np.column_stack([np.ones(n), np.log(T)])
        (a, b), *_ = np.linalg.lstsq(X, R, rcond=None)
        logfit = [float(a), float(b)]
        ssr_log = float(np.sum((R - X @ np.array([a, b])) ** 2))
    if n >= 3 and np.all(R > 0):
        y = np.log(R)
        (c0, beta), *_ = np.linalg.lstsq(X, y, rcond=None)
        res = y - X @ np.array([c0, beta])
        s2 = float(res @ res) / (n - 2)
        sxx = float(np.sum((X[:, 1] - X[:, 1].mean()) ** 2))
        half = stats.t.ppf(0.975, n - 2) * math.sqrt(s2 / sxx)
        beta = float(beta)
        ci = [beta - half, beta + half]
        ssr_pow = float(np.sum((R - np.exp(c0) * T**beta) ** 2))
        if ssr_pow * dominance <= ssr_log:
            verdict = "power"
        elif ssr_log * dominance <= ssr_pow:
            verdict = "logarithmic"
    return SweepResult(
        [int(t) for t in T], [float(r) for r in R], se, tr, beta, ci, logfit, ssr_log, ssr_pow, verdict
    )


def fit_sweep(data: SweepData, **kw) -> SweepResult:
    return fit_growth(data.horizons, data.mean(), data.stderr(), [data.trials] * len(data.horizons), **kw)


# ---------------------------------------------------------------------------
# sensitivity of the argmin map


@dataclass
class HolderResult:
    constant: float
    violation_ratio: float
    max_ratio: float
    analytic_bound: Optional[float]
    pairs: int


def holder_check(F: DecisionSet, Z, q: float = 2.0, samples: int = 2000, seed: int = 0,
                 min_gap: float = 1e-6) -> HolderResult:
    """Sampled Hoelder constant of ``z -> argmin_{f in F} z . f`` with exponent ``1/(q-1)``.

    The constant is fitted as the largest ratio on the first half of the
    pairs; ``violation_ratio`` is the largest ratio on the second half divided
    by it. Pairs closer than ``min_gap`` are skipped. For Euclidean balls and
    ellipsoids with ``q = 2`` the analytic Lipschitz constant is reported too.
    """
    if not 2.0 <= q <= 3.0:
        raise ValueError("q must lie in [2, 3]")
    if hasattr(Z, "min_norm") and Z.min_norm() <= 0:
        raise GameError("Z reaches the origin; the argmin map is undefined there")
    rng = np.random.default_rng(seed)
    P = Z.sample(rng, 2 * samples)
    if np.min(np.linalg.norm(P, axis=1)) < 1e-9:
        raise GameError("sampled z is at the origin; the argmin map is undefined there")
    A, B = P[:samples], P[samples:]
    gap = np.linalg.norm(A - B, axis=1)
    keep = gap >= min_gap
    ratios = []
    for a, b, g in zip(A[keep], B[keep], gap[keep]):
        fa, fb = F.linmin(a)[0], F.linmin(b)[0]
        ratios.append(np.linalg.norm(fa - fb) / g ** (1.0 / (q - 1.0)))
    ratios = np.asarray(ratios)
    if ratios.size < 2:
        raise GameError("too few distinct pairs sampled")
    half = ratios.size // 2
    c_hat = float(ratios[:half].max())
    viol = float(ratios[half:].max() / c_hat) if c_hat > 0 else 0.0
    bound = None
    if q == 2.0 and isinstance(F, (L2Ball, Ellipsoid)) and hasattr(Z, "min_norm"):
        bound = float(F.lipschitz_constant(Z.min_norm()))
    return HolderResult(c_hat, viol, float(ratios.max()), bound, int(ratios.size))


# ---------------------------------------------------------------------------
# output


def fmt(x) -> str:
    """Float with 17 significant digits; integers unchanged."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    s = format(float(x), ".17g")
    if s.lstrip("-").isdigit():
        s += ".0"
    return s


CSV_HEADER = ["T", "trial", "seed", "regret", "cumulative_loss", "benchmark"]


def trials_csv(data: SweepData) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    R = data.regret
    for k, T in enumerate(data.horizons):
        for i in range(data.trials):
            w.writerow([T, i, int(data.seeds[i]), fmt(R[k, i]),
                        fmt(data.cumulative_loss[k, i]), fmt(data.benchmark[k, i])])
    return buf.getvalue()


def dumps17(obj) -> str:
    """JSON text with every float written to 17 significant digits."""
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, float):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps17(v) for v in obj) + "]"
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps17(v)}" for k, v in obj.items()) + "}"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def summary_json(result: SweepResult, extra: Optional[dict] = None) -> str:
    d = result.to_dict()
    if extra:
        d.update(extra)
    return dumps17(d) + "\n"
