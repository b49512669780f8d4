"""Pure numpy implementations of the hot loops.

Must follow exactly the same tie-breaking rules as ``_kernels.pyx``.
"""

from __future__ import annotations

import numpy as np

L2, LP, VERTS, BOX, ELLIPSOID = 0, 1, 2, 3, 4
TABLE_TIE_TOL = 1e-12


def _prefix_before(S: np.ndarray) -> np.ndarray:
    out = np.zeros_like(S)
    out[:, 1:] = S[:, :-1]
    return out


def _lin_value(S, code, a, b, M, radius, p):
    """``min_f S.f`` for every row of ``S`` (last axis is the dimension)."""
    if code == L2:
        return S @ a - radius * np.sqrt(np.sum(S * S, axis=-1))
    if code == LP:
        pp = p / (p - 1.0)
        return S @ a - radius * np.sum(np.abs(S) ** pp, axis=-1) ** (1.0 / pp)
    if code == VERTS:
        return np.min(S @ M.T, axis=-1)
    if code == BOX:
        return np.sum(np.minimum(S * a, S * b), axis=-1)
    if code == ELLIPSOID:
        return S @ a - np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", S, M, S), 0.0))
    raise ValueError(f"unknown set code {code}")


def _lin_argmin(S, code, a, b, M, radius, p):
    if code == L2:
        n = np.sqrt(np.sum(S * S, axis=-1, keepdims=True))
        safe = np.where(n > 0, n, 1.0)
        return np.where(n > 0, a - radius * S / safe, a)
    if code == LP:
        pp = p / (p - 1.0)
        n = np.sum(np.abs(S) ** pp, axis=-1, keepdims=True) ** (1.0 / pp)
        safe = np.where(n > 0, n, 1.0)
        f = a - radius * np.sign(S) * np.abs(S) ** (pp - 1.0) / safe ** (pp - 1.0)
        return np.where(n > 0, f, a)
    if code == VERTS:
        return M[np.argmin(S @ M.T, axis=-1)]
    if code == BOX:
        return np.where(S < 0, b, a)
    if code == ELLIPSOID:
        w = S @ M.T
        s = np.sqrt(np.maximum(np.sum(S * w, axis=-1, keepdims=True), 0.0))
        safe = np.where(s > 0, s, 1.0)
        return np.where(s > 0, a - w / safe, a)
    raise ValueError(f"unknown set code {code}")


def ftl_linear(Z, code, a, b, M, radius, p, checkpoints):
    """FTL on a linear loss for a batch of opponent paths.

    ``Z`` has shape ``(n, T, d)``. Returns cumulative player loss and the
    best-in-hindsight value at each checkpoint horizon, both ``(n, K)``.
    """
    Z = np.ascontiguousarray(Z, dtype=float)
    ck = np.asarray(checkpoints, dtype=np.int64)
    S = np.cumsum(Z, axis=1)
    F = _lin_argmin(_prefix_before(S), code, a, b, M, radius, p)
    cum = np.cumsum(np.sum(Z * F, axis=-1), axis=1)
    cum_at = np.zeros((Z.shape[0], ck.size))
    bench = np.zeros((Z.shape[0], ck.size))
    for k, T in enumerate(ck):
        if T > 0:
            cum_at[:, k] = cum[:, T - 1]
            bench[:, k] = _lin_value(S[:, T - 1], code, a, b, M, radius, p)
    return cum_at, bench


def ct_paths(U, c):
    """Signs of the biased martingale: ``W_t = +1`` iff ``U_t < (1 + c_t W_{1:t-1}) / 2``."""
    U = np.asarray(U, dtype=float)
    n, T = U.shape
    W = np.empty((n, T), dtype=np.int8)
    s = np.zeros(n)
    for t in range(T):
        w = np.where(U[:, t] < 0.5 * (1.0 + c[t] * s), 1, -1)
        W[:, t] = w
        s += w
    return W


def ct_surrogate(W, c):
    """``(sum W)^2 / T - sum_t (c_t W_{1:t-1})^2`` per path."""
    W = np.asarray(W, dtype=float)
    T = W.shape[1]
    prev = _prefix_before(np.cumsum(W, axis=1))
    total = W.sum(axis=1)
    return total * total / T - np.sum((c[None, :] * prev) ** 2, axis=1)


def ftl_table(idx, L, checkpoints):
    """FTL over a finite candidate list given a loss table ``L[z, j]``.

    ``idx`` holds opponent move indices, shape ``(n, T)``. The leader is the
    lowest-index candidate within ``TABLE_TIE_TOL * (1 + |min|)`` of the
    smallest cumulative loss.
    """
    idx = np.asarray(idx, dtype=np.int64)
    L = np.asarray(L, dtype=float)
    ck = np.asarray(checkpoints, dtype=np.int64)
    n, T = idx.shape
    C = np.cumsum(L[idx], axis=1)
    prev = np.zeros_like(C)
    prev[:, 1:] = C[:, :-1]
    lo = prev.min(axis=-1, keepdims=True)
    ok = prev <= lo + TABLE_TIE_TOL * (1.0 + np.abs(lo))
    choice = np.argmax(ok, axis=-1)
    step = L[idx, choice]
    cum = np.cumsum(step, axis=1)
    cum_at = np.zeros((n, ck.size))
    bench = np.zeros((n, ck.size))
    for k, t in enumerate(ck):
        if t > 0:
            cum_at[:, k] = cum[:, t - 1]
            bench[:, k] = C[:, t - 1].min(axis=-1)
    return cum_at, bench
