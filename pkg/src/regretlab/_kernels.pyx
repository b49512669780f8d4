# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; same contracts and tie rules as ``_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs, fmin

cnp.import_array()

cdef enum:
    L2 = 0
    LP = 1
    VERTS = 2
    BOX = 3
    ELLIPSOID = 4

TABLE_TIE_TOL = 1e-12


cdef inline double _sign(double x) nogil:
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


cdef double _argmin_into(double[::1] S, int code, double[::1] a, double[::1] b,
                         double[:, ::1] M, double radius, double p,
                         double[::1] f, double[::1] work) noexcept nogil:
    """Write ``argmin_f S.f`` into ``f`` and return the minimum value."""
    cdef Py_ssize_t d = S.shape[0]
    cdef Py_ssize_t i, j, best
    cdef double n, v, bv, pp, s
    if code == L2:
        n = 0.0
        for i in range(d):
            n += S[i] * S[i]
        n = sqrt(n)
        v = 0.0
        for i in range(d):
            if n > 0:
                f[i] = a[i] - radius * S[i] / n
            else:
                f[i] = a[i]
            v += S[i] * f[i]
        return v
    elif code == LP:
        pp = p / (p - 1.0)
        n = 0.0
        for i in range(d):
            n += pow(fabs(S[i]), pp)
        n = pow(n, 1.0 / pp)
        v = 0.0
        for i in range(d):
            if n > 0:
                f[i] = a[i] - radius * _sign(S[i]) * pow(fabs(S[i]), pp - 1.0) / pow(n, pp - 1.0)
            else:
                f[i] = a[i]
            v += S[i] * f[i]
        return v
    elif code == VERTS:
        best = 0
        bv = 0.0
        for j in range(M.shape[0]):
            v = 0.0
            for i in range(d):
                v += S[i] * M[j, i]
            if j == 0 or v < bv:
                bv = v
                best = j
        for i in range(d):
            f[i] = M[best, i]
        return bv
    elif code == BOX:
        v = 0.0
        for i in range(d):
            if S[i] < 0:
                f[i] = b[i]
            else:
                f[i] = a[i]
            v += S[i] * f[i]
        return v
    else:
        s = 0.0
        for i in range(d):
            work[i] = 0.0
            for j in range(d):
                work[i] += M[i, j] * S[j]
            s += S[i] * work[i]
        if s < 0:
            s = 0.0
        s = sqrt(s)
        v = 0.0
        for i in range(d):
            if s > 0:
                f[i] = a[i] - work[i] / s
            else:
                f[i] = a[i]
            v += S[i] * f[i]
        return v


def ftl_linear(Z, int code, a, b, M, double radius, double p, checkpoints):
    """FTL on a linear loss for a batch of opponent paths ``Z[n, T, d]``."""
    cdef double[:, :, ::1] z = np.ascontiguousarray(Z, dtype=np.float64)
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[:, ::1] Mv = np.ascontiguousarray(M, dtype=np.float64)
    cdef cnp.int64_t[::1] ck = np.ascontiguousarray(checkpoints, dtype=np.int64)
    cdef Py_ssize_t n = z.shape[0], T = z.shape[1], d = z.shape[2]
    cdef Py_ssize_t K = ck.shape[0]
    out_cum = np.zeros((n, K))
    out_bench = np.zeros((n, K))
    cdef double[:, ::1] oc = out_cum
    cdef double[:, ::1] ob = out_bench
    cdef double[::1] S = np.zeros(d)
    cdef double[::1] f = np.zeros(d)
    cdef double[::1] g = np.zeros(d)
    cdef double[::1] work = np.zeros(d)
    cdef Py_ssize_t r, t, i, k
    cdef double cum, loss
    with nogil:
        for r in range(n):
            for i in range(d):
                S[i] = 0.0
            cum = 0.0
            k = 0
            while k < K and ck[k] <= 0:
                k += 1
            for t in range(T):
                _argmin_into(S, code, av, bv, Mv, radius, p, f, work)
                loss = 0.0
                for i in range(d):
                    loss += z[r, t, i] * f[i]
                    S[i] += z[r, t, i]
                cum += loss
                while k < K and ck[k] == t + 1:
                    oc[r, k] = cum
                    ob[r, k] = _argmin_into(S, code, av, bv, Mv, radius, p, g, work)
                    k += 1
    return out_cum, out_bench


def ct_paths(U, c):
    cdef double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0], T = u.shape[1]
    W = np.empty((n, T), dtype=np.int8)
    cdef cnp.int8_t[:, ::1] w = W
    cdef Py_ssize_t r, t
    cdef double s
    with nogil:
        for r in range(n):
            s = 0.0
            for t in range(T):
                if u[r, t] < 0.5 * (1.0 + cv[t] * s):
                    w[r, t] = 1
                    s += 1.0
                else:
                    w[r, t] = -1
                    s -= 1.0
    return W


def ct_surrogate(W, c):
    cdef cnp.int8_t[:, ::1] w = np.ascontiguousarray(W, dtype=np.int8)
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef Py_ssize_t n = w.shape[0], T = w.shape[1]
    out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t r, t
    cdef double s, acc, x
    with nogil:
        for r in range(n):
            s = 0.0
            acc = 0.0
            for t in range(T):
                x = cv[t] * s
                acc += x * x
                s += w[r, t]
            o[r] = s * s / T - acc
    return out


def ftl_table(idx, L, checkpoints):
    """FTL over candidate columns of the loss table ``L[z, j]``."""
    cdef cnp.int64_t[:, ::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef double[:, ::1] Lv = np.ascontiguousarray(L, dtype=np.float64)
    cdef cnp.int64_t[::1] ck = np.ascontiguousarray(checkpoints, dtype=np.int64)
    cdef Py_ssize_t n = ix.shape[0], T = ix.shape[1], J = Lv.shape[1]
    cdef Py_ssize_t K = ck.shape[0]
    out_cum = np.zeros((n, K))
    out_bench = np.zeros((n, K))
    cdef double[:, ::1] oc = out_cum
    cdef double[:, ::1] ob = out_bench
    cdef double[::1] C = np.zeros(J)
    cdef Py_ssize_t r, t, j, k, choice, zi
    cdef double lo, thr, cum
    cdef double tol = TABLE_TIE_TOL
    with nogil:
        for r in range(n):
            for j in range(J):
                C[j] = 0.0
            cum = 0.0
            k = 0
            while k < K and ck[k] <= 0:
                k += 1
            for t in range(T):
                lo = C[0]
                for j in range(1, J):
                    lo = fmin(lo, C[j])
                thr = lo + tol * (1.0 + fabs(lo))
                choice = 0
                for j in range(J):
                    if C[j] <= thr:
                        choice = j
                        break
                zi = ix[r, t]
                cum += Lv[zi, choice]
                for j in range(J):
                    C[j] += Lv[zi, j]
                while k < K and ck[k] == t + 1:
                    oc[r, k] = cum
                    lo = C[0]
                    for j in range(1, J):
                        lo = fmin(lo, C[j])
                    ob[r, k] = lo
                    k += 1
    return out_cum, out_bench
