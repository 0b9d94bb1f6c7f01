"""Pure-Python (numpy) versions of the compiled kernels in ``_core.pyx``.

Each function follows the same algorithm, pivot order and return convention
as its compiled twin, so results agree to rounding.
"""
from __future__ import annotations

import numpy as np

OPTIMAL = 0
ITERATION_CAP = -1
SINGULAR_BASIS = -2
UNBOUNDED = -3


def _rotation(theta: float) -> tuple[float, float]:
    if theta >= 0:
        t = 1.0 / (theta + np.sqrt(1.0 + theta * theta))
    else:
        t = -1.0 / (-theta + np.sqrt(1.0 + theta * theta))
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, t * c


def jacobi_eigh(S, tol, max_sweeps):
    a = np.array(S, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.sqrt(np.sum(a * a))
    sweep = 0
    iu = np.triu_indices(n, 1)
    while sweep < max_sweeps:
        if np.sqrt(2.0 * np.sum(a[iu] ** 2)) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                c, s = _rotation((a[q, q] - a[p, p]) / (2.0 * apq))
                colp, colq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * colp - s * colq
                a[:, q] = s * colp + c * colq
                rowp, rowq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rowp - s * rowq
                a[q, :] = s * rowp + c * rowq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        sweep += 1
    return np.diag(a).copy(), v, sweep


def jacobi_svd_rows(Gt, want_v, tol, max_sweeps):
    g = np.array(Gt, dtype=np.float64, copy=True)
    k = g.shape[0]
    vt = np.eye(k) if want_v else None
    floor2 = np.sum(g * g) * 1e-32 + 1e-300
    sweep = 0
    while sweep < max_sweeps:
        rotated = 0
        for p in range(k - 1):
            for q in range(p + 1, k):
                gp, gq = g[p], g[q]
                alpha = gp @ gp
                beta = gq @ gq
                gamma = gp @ gq
                if alpha < floor2 or beta < floor2:
                    continue
                if abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated += 1
                c, s = _rotation((beta - alpha) / (2.0 * gamma))
                g[p], g[q] = c * gp - s * gq, s * gp + c * gq
                if want_v:
                    vp, vq = vt[p].copy(), vt[q].copy()
                    vt[p], vt[q] = c * vp - s * vq, s * vp + c * vq
        sweep += 1
        if rotated == 0:
            break
    return g, vt, sweep


def _refactor(At, y, var, basic, neg_tol):
    N = At.shape[0]
    cols = var % N
    signs = np.where(var < N, 1.0, -1.0)
    B = (At[cols] * signs[:, None]).T
    scale = np.abs(B).max()
    if scale == 0.0:
        return None, None
    try:
        binv = np.linalg.inv(B)
    except np.linalg.LinAlgError:
        return None, None
    if not np.all(np.isfinite(binv)):
        return None, None
    x = binv @ y
    flip = x < -neg_tol
    if flip.any():
        for i in np.flatnonzero(flip):
            basic[var[i]] = 0
            var[i] = var[i] + N if var[i] < N else var[i] - N
            basic[var[i]] = 1
        binv[flip] *= -1.0
        x[flip] *= -1.0
    np.maximum(x, 0.0, out=x)
    return binv, x


def simplex_l1(At, y, start_cols, tol, max_iter, refactor_every, bland_after):
    At = np.asarray(At, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    N, n = At.shape
    var = np.array(start_cols, dtype=np.int64).copy()
    basic = np.zeros(2 * N, dtype=bool)
    basic[var] = True
    neg_tol = 1e-9 * (1.0 + np.abs(y).max())
    binv, x = _refactor(At, y, var, basic, neg_tol)
    if binv is None:
        return SINGULAR_BASIS, var, np.empty(n), np.empty(n), 0
    status = OPTIMAL
    it = 0
    since = 0
    degenerate = 0
    bland = bland_after <= 0
    while True:
        if since >= refactor_every:
            binv, x = _refactor(At, y, var, basic, neg_tol)
            if binv is None:
                status = SINGULAR_BASIS
                break
            since = 0
        u = binv.sum(axis=0)
        g = At @ u
        rc = np.concatenate([1.0 - g, 1.0 + g])
        rc[basic] = np.inf
        if bland:
            cand = np.flatnonzero(rc < -tol)
            if not cand.size:
                break
            q = int(cand[0])
        else:
            q = int(np.argmin(rc))
            if not rc[q] < -tol:
                break
        if it >= max_iter:
            status = ITERATION_CAP
            break
        col = q % N
        d = (binv @ At[col]) * (1.0 if q < N else -1.0)
        dmax = np.abs(d).max()
        ok = d > tol * (1.0 + dmax)
        if not ok.any():
            status = UNBOUNDED
            break
        ratios = np.full(n, np.inf)
        ratios[ok] = x[ok] / d[ok]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * (1.0 + best))
        leave = int(ties[np.argmin(var[ties])])
        theta = x[leave] / d[leave]
        if theta <= 0.0:
            degenerate += 1
            if bland_after > 0 and degenerate >= bland_after:
                bland = True
        else:
            degenerate = 0
        x -= theta * d
        np.maximum(x, 0.0, out=x)
        x[leave] = theta
        binv[leave] /= d[leave]
        mask = np.arange(n) != leave
        binv[mask] -= np.outer(d[mask], binv[leave])
        basic[var[leave]] = False
        var[leave] = q
        basic[q] = True
        it += 1
        since += 1
    if status in (OPTIMAL, ITERATION_CAP):
        binv, x2 = _refactor(At, y, var, basic, neg_tol)
        if binv is None:
            return SINGULAR_BASIS, var, x, np.empty(n), it
        x = x2
        u = binv.sum(axis=0)
    else:
        u = np.empty(n)
    return status, var, x, u, it
