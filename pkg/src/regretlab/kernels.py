"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise the numpy
fallback. Setting ``REGRETLAB_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _fallback
from .geometry import Box, DecisionSet, Ellipsoid, L2Ball, LpBall, _VertexSet

if os.environ.get("REGRETLAB_PURE_PYTHON", "") not in ("", "0"):
    _backend = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _backend  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        _backend = _fallback
        BACKEND = "python"

BACKENDS = {"python": _fallback}
if BACKEND == "compiled":
    BACKENDS["compiled"] = _backend


def _get(backend):
    if backend is None:
        return _backend
    try:
        return BACKENDS[backend]
    except KeyError:
        raise ValueError(f"backend {backend!r} is not available; have {sorted(BACKENDS)}") from None


def set_code(dset: DecisionSet):
    """Encode a decision set for :func:`ftl_linear`."""
    d = dset.dim
    empty = np.zeros((1, d))
    zero = np.zeros(d)
    if isinstance(dset, L2Ball):
        return _fallback.L2, dset.center, zero, empty, float(dset.radius), 2.0
    if isinstance(dset, LpBall):
        return _fallback.LP, dset.center, zero, empty, float(dset.radius), float(dset.p)
    if isinstance(dset, Box):
        return _fallback.BOX, dset.lo, dset.hi, empty, 0.0, 0.0
    if isinstance(dset, Ellipsoid):
        return _fallback.ELLIPSOID, dset.center, zero, dset._Qinv, 0.0, 0.0
    if isinstance(dset, _VertexSet):
        return _fallback.VERTS, zero, zero, dset.vertices(), 0.0, 0.0
    raise ValueError(f"no kernel for decision set {dset.kind}")


def ftl_linear(Z, dset: DecisionSet, checkpoints, backend=None):
    """Cumulative FTL loss and hindsight benchmark at each checkpoint."""
    code, a, b, M, radius, p = set_code(dset)
    return _get(backend).ftl_linear(
        np.ascontiguousarray(Z, dtype=float), code,
        np.ascontiguousarray(a, dtype=float), np.ascontiguousarray(b, dtype=float),
        np.ascontiguousarray(M, dtype=float), radius, p,
        np.ascontiguousarray(checkpoints, dtype=np.int64),
    )


def ct_paths(U, c, backend=None):
    return _get(backend).ct_paths(np.ascontiguousarray(U, dtype=float), np.ascontiguousarray(c, dtype=float))


def ct_surrogate(W, c, backend=None):
    return _get(backend).ct_surrogate(np.ascontiguousarray(W, dtype=np.int8), np.ascontiguousarray(c, dtype=float))


def ftl_table(idx, L, checkpoints, backend=None):
    return _get(backend).ftl_table(
        np.ascontiguousarray(idx, dtype=np.int64),
        np.ascontiguousarray(L, dtype=float),
        np.ascontiguousarray(checkpoints, dtype=np.int64),
    )
