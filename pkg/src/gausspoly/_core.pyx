# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Same signatures and return conventions as ``gausspoly._fallback``; the two
must agree to rounding on every input (checked in ``tests/test_kernels.py``).
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

# status codes shared with the fallback
cdef enum:
    OPTIMAL = 0
    ITERATION_CAP = -1
    SINGULAR_BASIS = -2
    UNBOUNDED = -3


def jacobi_eigh(const double[:, ::1] S, double tol, int max_sweeps):
    """Cyclic two-sided Jacobi on a symmetric matrix.

    Returns ``(w, V, sweeps)`` with ``S = V diag(w) V^T``; ``w`` unsorted.
    """
    cdef Py_ssize_t n = S.shape[0]
    a_np = np.array(S, dtype=np.float64, copy=True)
    v_np = np.eye(n)
    cdef double[:, ::1] a = a_np
    cdef double[:, ::1] v = v_np
    cdef Py_ssize_t i, j, p, q
    cdef double scale = 0.0, off, apq, theta, t, c, s, x, y
    cdef int sweep = 0
    for i in range(n):
        for j in range(n):
            scale += a[i, j] * a[i, j]
    scale = sqrt(scale)
    while sweep < max_sweeps:
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if sqrt(2.0 * off) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for i in range(n):
                    x = a[i, p]
                    y = a[i, q]
                    a[i, p] = c * x - s * y
                    a[i, q] = s * x + c * y
                for i in range(n):
                    x = a[p, i]
                    y = a[q, i]
                    a[p, i] = c * x - s * y
                    a[q, i] = s * x + c * y
                for i in range(n):
                    x = v[i, p]
                    y = v[i, q]
                    v[i, p] = c * x - s * y
                    v[i, q] = s * x + c * y
        sweep += 1
    w = np.array([a[i, i] for i in range(n)], dtype=np.float64)
    return w, v_np, sweep


def jacobi_svd_rows(const double[:, ::1] Gt, bint want_v, double tol, int max_sweeps):
    """One-sided (Hestenes) Jacobi on the rows of ``Gt``.

    Rows are rotated pairwise until mutually orthogonal.  Returns
    ``(W, Vt, sweeps)`` where ``W = Vt @ Gt`` has orthogonal rows and ``Vt``
    is orthogonal (``None`` unless ``want_v``).
    """
    cdef Py_ssize_t k = Gt.shape[0], m = Gt.shape[1]
    g_np = np.array(Gt, dtype=np.float64, copy=True)
    cdef double[:, ::1] g = g_np
    cdef double[:, ::1] v
    vt_np = None
    if want_v:
        vt_np = np.eye(k)
        v = vt_np
    cdef Py_ssize_t i, p, q
    cdef double total = 0.0, floor2, alpha, beta, gamma, zeta, t, c, s, x, y
    cdef int sweep = 0, rotated
    for p in range(k):
        for i in range(m):
            total += g[p, i] * g[p, i]
    floor2 = total * 1e-32 + 1e-300
    while sweep < max_sweeps:
        rotated = 0
        for p in range(k - 1):
            for q in range(p + 1, k):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(m):
                    alpha += g[p, i] * g[p, i]
                    beta += g[q, i] * g[q, i]
                    gamma += g[p, i] * g[q, i]
                if alpha < floor2 or beta < floor2:
                    continue
                if fabs(gamma) <= tol * sqrt(alpha * beta):
                    continue
                rotated += 1
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0:
                    t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for i in range(m):
                    x = g[p, i]
                    y = g[q, i]
                    g[p, i] = c * x - s * y
                    g[q, i] = s * x + c * y
                if want_v:
                    for i in range(k):
                        x = v[p, i]
                        y = v[q, i]
                        v[p, i] = c * x - s * y
                        v[q, i] = s * x + c * y
        sweep += 1
        if rotated == 0:
            break
    return g_np, vt_np, sweep


cdef int _invert(double[:, ::1] b, double[:, ::1] out) noexcept:
    """Gauss-Jordan with partial pivoting; ``b`` is destroyed."""
    cdef Py_ssize_t n = b.shape[0], i, j, r, piv
    cdef double best, f, tmp, scale = 0.0
    for i in range(n):
        for j in range(n):
            out[i, j] = 1.0 if i == j else 0.0
            if fabs(b[i, j]) > scale:
                scale = fabs(b[i, j])
    if scale == 0.0:
        return -1
    for j in range(n):
        piv = j
        best = fabs(b[j, j])
        for i in range(j + 1, n):
            if fabs(b[i, j]) > best:
                best = fabs(b[i, j])
                piv = i
        if best <= 1e-13 * scale:
            return -1
        if piv != j:
            for r in range(n):
                tmp = b[j, r]; b[j, r] = b[piv, r]; b[piv, r] = tmp
                tmp = out[j, r]; out[j, r] = out[piv, r]; out[piv, r] = tmp
        f = 1.0 / b[j, j]
        for r in range(n):
            b[j, r] *= f
            out[j, r] *= f
        for i in range(n):
            if i != j and b[i, j] != 0.0:
                f = b[i, j]
                for r in range(n):
                    b[i, r] -= f * b[j, r]
                    out[i, r] -= f * out[j, r]
    return 0


cdef int _refactor(const double[:, ::1] At, const double[::1] y, long long[::1] var,
                   double[:, ::1] work, double[:, ::1] binv, double[::1] x,
                   unsigned char[::1] basic, double neg_tol) noexcept:
    """Rebuild the basis inverse from ``var``.

    Basic values below ``-neg_tol`` get their column sign flipped (the
    signed basis stays feasible); smaller negatives are rounding and clamp to 0.
    """
    cdef Py_ssize_t n = At.shape[1], N = At.shape[0], i, r, col
    cdef double sgn, acc
    for i in range(n):
        col = var[i] % N
        sgn = 1.0 if var[i] < N else -1.0
        for r in range(n):
            work[r, i] = sgn * At[col, r]
    if _invert(work, binv) != 0:
        return -1
    for i in range(n):
        acc = 0.0
        for r in range(n):
            acc += binv[i, r] * y[r]
        if acc < -neg_tol:
            basic[var[i]] = 0
            var[i] = var[i] + N if var[i] < N else var[i] - N
            basic[var[i]] = 1
            for r in range(n):
                binv[i, r] = -binv[i, r]
            acc = -acc
        x[i] = acc if acc > 0.0 else 0.0
    return 0


def simplex_l1(const double[:, ::1] At, const double[::1] y, const long long[::1] start_cols,
               double tol, Py_ssize_t max_iter, int refactor_every, int bland_after):
    """Primal revised simplex for ``min 1'(b+ + b-)  s.t.  A(b+ - b-) = y``.

    ``At`` is ``A`` transposed (row ``j`` is column ``X_j``).  Variable ``j``
    is ``b+_j`` and variable ``N + j`` is ``b-_j``.  ``start_cols`` are ``n``
    variable indices whose columns are invertible; a start variable whose
    value is below ``-1e-9 (1 + max|y|)`` has its sign flipped so the
    starting basis is primal feasible, smaller negatives are clamped to 0.

    Entering variable: most negative reduced cost (lowest index on ties);
    after ``bland_after`` consecutive degenerate pivots, and for the rest of
    the solve, Bland's lowest-index rule.  ``bland_after=0`` is pure Bland.
    Leaving variable: minimum ratio, lowest variable index on ties.

    Returns ``(status, var, x, u, iterations)``.
    """
    cdef Py_ssize_t N = At.shape[0], n = At.shape[1]
    cdef Py_ssize_t i, j, r, q, leave, col, it = 0
    cdef int since = 0, degenerate = 0
    cdef bint bland = bland_after <= 0
    cdef double most
    cdef double acc, sgn, ratio, best, theta, f, dmax, ymax = 0.0, neg_tol
    var_np = np.empty(n, dtype=np.int64)
    x_np = np.empty(n)
    u_np = np.empty(n)
    cdef long long[::1] var = var_np
    cdef double[::1] x = x_np
    cdef double[::1] u = u_np
    cdef double[::1] d = np.empty(n)
    cdef double[::1] g = np.empty(N)
    cdef double[:, ::1] binv = np.empty((n, n))
    cdef double[:, ::1] work = np.empty((n, n))
    basic_np = np.zeros(2 * N, dtype=np.uint8)
    cdef unsigned char[::1] basic = basic_np
    cdef int status = OPTIMAL

    for i in range(n):
        var[i] = start_cols[i]
        basic[var[i]] = 1
    for r in range(n):
        if fabs(y[r]) > ymax:
            ymax = fabs(y[r])
    neg_tol = 1e-9 * (1.0 + ymax)
    if _refactor(At, y, var, work, binv, x, basic, neg_tol) != 0:
        return SINGULAR_BASIS, var_np, x_np, u_np, 0

    while True:
        if since >= refactor_every:
            if _refactor(At, y, var, work, binv, x, basic, neg_tol) != 0:
                status = SINGULAR_BASIS
                break
            since = 0
        for r in range(n):
            acc = 0.0
            for i in range(n):
                acc += binv[i, r]
            u[r] = acc
        for j in range(N):
            acc = 0.0
            for r in range(n):
                acc += At[j, r] * u[r]
            g[j] = acc
        q = -1
        if bland:
            for j in range(N):
                if not basic[j] and 1.0 - g[j] < -tol:
                    q = j
                    break
            if q == -1:
                for j in range(N):
                    if not basic[N + j] and 1.0 + g[j] < -tol:
                        q = N + j
                        break
        else:
            most = -tol
            for j in range(N):
                if not basic[j] and 1.0 - g[j] < most:
                    most = 1.0 - g[j]
                    q = j
            for j in range(N):
                if not basic[N + j] and 1.0 + g[j] < most:
                    most = 1.0 + g[j]
                    q = N + j
        if q == -1:
            break
        if it >= max_iter:
            status = ITERATION_CAP
            break
        col = q % N
        sgn = 1.0 if q < N else -1.0
        dmax = 0.0
        for i in range(n):
            acc = 0.0
            for r in range(n):
                acc += binv[i, r] * At[col, r]
            d[i] = sgn * acc
            if fabs(d[i]) > dmax:
                dmax = fabs(d[i])
        best = -1.0
        for i in range(n):
            if d[i] > tol * (1.0 + dmax):
                ratio = x[i] / d[i]
                if best < 0.0 or ratio < best:
                    best = ratio
        if best < 0.0:
            status = UNBOUNDED
            break
        leave = -1
        for i in range(n):
            if d[i] > tol * (1.0 + dmax):
                ratio = x[i] / d[i]
                if ratio <= best + 1e-12 * (1.0 + best):
                    if leave == -1 or var[i] < var[leave]:
                        leave = i
        theta = x[leave] / d[leave]
        if theta <= 0.0:
            degenerate += 1
            if bland_after > 0 and degenerate >= bland_after:
                bland = True
        else:
            degenerate = 0
        for i in range(n):
            if i != leave:
                x[i] -= theta * d[i]
                if x[i] < 0.0:
                    x[i] = 0.0
        x[leave] = theta
        f = 1.0 / d[leave]
        for r in range(n):
            binv[leave, r] *= f
        for i in range(n):
            if i != leave and d[i] != 0.0:
                for r in range(n):
                    binv[i, r] -= d[i] * binv[leave, r]
        basic[var[leave]] = 0
        var[leave] = q
        basic[q] = 1
        it += 1
        since += 1

    if status == OPTIMAL or status == ITERATION_CAP:
        if _refactor(At, y, var, work, binv, x, basic, neg_tol) != 0:
            status = SINGULAR_BASIS
        for r in range(n):
            acc = 0.0
            for i in range(n):
                acc += binv[i, r]
            u[r] = acc
    return status, var_np, x_np, u_np, it
