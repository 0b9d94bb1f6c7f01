"""The gauge of ``P = conv{+-X_j}`` as an L1-minimization problem.

``||y||_P = min ||beta||_1  subject to  A beta = y``, solved exactly by a
primal simplex on the standard form with variables ``beta+`` and ``beta-``.
Cold solves start from a basis fixed by ``A`` alone and pivot
deterministically, so the returned coefficient vector is a pure function of
``(A, y)``.

Right-hand sides such as ``y = X_j`` make the optimal vertex highly
degenerate, which stalls a primal simplex.  Each solve therefore runs first
on ``y + eps B r`` (``B`` the signed starting basis, ``r`` a fixed positive
vector, ``eps = 1e-7 max|y|``), which is nondegenerate, and then finishes on
``y`` itself from the basis reached; that basis is already dual feasible so
the second phase takes few or no pivots.  The perturbation scales with
``y``, so ``beta(2y) = 2 beta(y)`` exactly.

Batch evaluation warm-starts each solve from the previous optimal basis;
values are unchanged (the optimum is unique), only the particular optimal
``beta`` may differ.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .ensemble import Ensemble
from .errors import ContractViolation, InfeasibleError, SolverFailure
from .numerics import singular_values

FEAS_TOL = 1e-9
DUAL_GAP_TOL = 1e-8
MEMBERSHIP_TOL = 1e-9
PIVOT_TOL = 1e-10
REFACTOR_EVERY = 32
# consecutive degenerate pivots before switching to Bland's rule for good
BLAND_AFTER = 50
PERTURBATION = 1e-7

# strict mode re-checks the dual certificate on every solve
STRICT = os.environ.get("GAUSSPOLY_STRICT") == "1"


@dataclass(frozen=True)
class CoefficientVector:
    beta: np.ndarray = field(repr=False)

    @property
    def l1(self) -> float:
        return float(np.abs(self.beta).sum())


@dataclass(frozen=True)
class NormCertificate:
    """Optimal value, optimal ``beta``, and the dual vector proving optimality.

    ``dual`` satisfies ``||A^T dual||_inf <= 1`` up to rounding, so
    ``dual_bound = <y, dual> / max(1, ||A^T dual||_inf)`` is a lower bound on
    the norm; ``dual_gap = value - dual_bound``.
    """

    value: float
    beta: CoefficientVector
    residual: float
    dual: np.ndarray = field(repr=False)
    dual_gap: float
    iterations: int = 0
    basis: np.ndarray | None = field(default=None, repr=False)


def _max_iter(E: Ensemble) -> int:
    return 50 * (E.n + E.N) + 1000


def start_basis(E: Ensemble) -> np.ndarray:
    """Deterministic well-conditioned starting columns (depends on ``A`` only).

    Columns are scanned in index order and accepted when their component
    orthogonal to the accepted ones keeps at least 10% of the column norm;
    a second pass with threshold 1e-8 fills any remaining slots.
    Raises :class:`InfeasibleError` when ``A`` lacks full row rank.
    """
    cached = E.cache.get("start_basis")
    if cached is not None:
        return cached
    s = singular_values(E.A)
    if s[-1] <= 1e-10 * s[0] or s[0] == 0.0:
        raise InfeasibleError(
            "A is rank deficient (polytope not full-dimensional); rejected up front"
        )
    chosen: list[int] = []
    Q = np.zeros((E.n, 0))
    for thresh in (0.1, 1e-8):
        for j in range(E.N):
            if len(chosen) == E.n:
                break
            if j in chosen:
                continue
            x = E.At[j]
            r = x - Q @ (Q.T @ x)
            r = r - Q @ (Q.T @ r)
            nr = np.linalg.norm(r)
            if nr > thresh * np.linalg.norm(x):
                chosen.append(j)
                Q = np.column_stack([Q, r / nr])
    cols = np.array(sorted(chosen), dtype=np.int64)
    E.cache["start_basis"] = cols
    return cols


def _certificate(E: Ensemble, y: np.ndarray, status, var, x, u, iters) -> NormCertificate:
    N = E.N
    if status == _kernels.ITERATION_CAP:
        g = np.abs(E.At @ u).max()
        raise SolverFailure(
            f"simplex hit the iteration cap ({iters})",
            best_bound=float(y @ u / max(1.0, g)),
            upper_bound=float(x.sum()),
        )
    if status == _kernels.UNBOUNDED:
        raise ContractViolation("simplex reported an unbounded ray for a bounded program")
    if status == _kernels.SINGULAR_BASIS:
        raise ContractViolation("simplex basis became singular")
    beta = np.zeros(N)
    cols = var % N
    signs = np.where(var < N, 1.0, -1.0)
    beta[cols] = signs * x
    value = float(x.sum())
    ynorm = float(np.linalg.norm(y))
    residual = float(np.linalg.norm(E.A @ beta - y))
    if residual > FEAS_TOL * (1.0 + ynorm):
        raise ContractViolation(f"feasibility residual {residual:.3e} exceeds tolerance")
    g = float(np.abs(E.At @ u).max())
    dual_bound = float(y @ u) / max(1.0, g)
    gap = value - dual_bound
    if STRICT and gap > DUAL_GAP_TOL * max(1.0, value):
        raise ContractViolation(f"dual gap {gap:.3e} exceeds tolerance")
    return NormCertificate(value, CoefficientVector(beta), residual, u, gap, iters, var.copy())


def _perturbed_start(E: Ensemble, y: np.ndarray, start: np.ndarray):
    cols = start % E.N
    B = E.A[:, cols] * np.where(start < E.N, 1.0, -1.0)
    try:
        x0 = np.linalg.solve(B, y)
    except np.linalg.LinAlgError:
        return None, None
    if not np.all(np.isfinite(x0)):
        return None, None
    flip = x0 < 0
    var = np.where(flip, np.where(start < E.N, start + E.N, start - E.N), start)
    r = 1.0 + (np.arange(E.n) * 0.6180339887498949) % 1.0
    B = E.A[:, cols] * np.where(var < E.N, 1.0, -1.0)
    return var, y + (PERTURBATION * float(np.abs(y).max())) * (B @ r)


def _solve(E: Ensemble, y: np.ndarray, start: np.ndarray):
    var, yp = _perturbed_start(E, y, start)
    if var is None:
        return (_kernels.SINGULAR_BASIS, start, None, None, 0)
    args = (PIVOT_TOL, _max_iter(E), REFACTOR_EVERY, BLAND_AFTER)
    first = _kernels.simplex_l1(E.At, yp, var, *args)
    if first[0] != _kernels.OPTIMAL:
        return _kernels.simplex_l1(E.At, y, var, *args)
    out = _kernels.simplex_l1(E.At, y, first[1], *args)
    return out[:4] + (out[4] + first[4],)


def minkowski_norm(E: Ensemble, y, start=None) -> NormCertificate:
    """``||y||_P`` with an optimal coefficient vector and dual certificate.

    ``start`` optionally gives ``n`` starting variable indices (a warm start;
    index ``N + j`` is the negated column ``j``).  The default cold start makes
    ``beta`` a deterministic function of ``(A, y)``.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != E.n:
        raise InfeasibleError(f"y has length {y.shape[0]}, expected {E.n}")
    cold = start_basis(E)
    if not np.any(y):
        return NormCertificate(0.0, CoefficientVector(np.zeros(E.N)), 0.0, np.zeros(E.n), 0.0)
    if start is not None:
        out = _solve(E, y, np.asarray(start, dtype=np.int64))
        if out[0] == _kernels.SINGULAR_BASIS:
            out = _solve(E, y, cold)
    else:
        out = _solve(E, y, cold)
    return _certificate(E, y, *out)


def coefficient_vector(E: Ensemble, y) -> CoefficientVector:
    return minkowski_norm(E, y).beta


def sign_combination_beta(E: Ensemble, Y, sigma) -> CoefficientVector:
    """Coefficient vector of ``sum_i sigma_i y_i``."""
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    sigma = np.asarray(sigma, dtype=np.float64)
    if Y.shape[0] < 1 or sigma.shape != (Y.shape[0],):
        raise InfeasibleError("need k >= 1 vectors and k signs")
    return coefficient_vector(E, sigma @ Y)


def membership(E: Ensemble, x) -> bool:
    return minkowski_norm(E, x).value <= 1.0 + MEMBERSHIP_TOL


def norm_values(E: Ensemble, points, return_betas: bool = False):
    """Norms of the rows of ``points``, warm-starting along the row order.

    Consecutive rows that are close (e.g. Gray-code sign sums) reuse most of
    the previous optimal basis.  With ``return_betas`` also returns the
    ``(m, N)`` array of the optimal coefficient vectors found.
    """
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    values = np.empty(P.shape[0])
    betas = np.zeros((P.shape[0], E.N)) if return_betas else None
    basis = None
    for i, y in enumerate(P):
        cert = minkowski_norm(E, y, start=basis)
        values[i] = cert.value
        if cert.basis is not None:
            basis = cert.basis
        if return_betas:
            betas[i] = cert.beta.beta
    if return_betas:
        return values, betas
    return values


def dual_lower_bound(E: Ensemble, y, u) -> float:
    """Lower bound on ``||y||_P`` from any vector ``u`` (weak duality)."""
    g = float(np.abs(E.At @ np.asarray(u, dtype=np.float64)).max())
    return float(np.asarray(y) @ u) / g if g > 0 else 0.0
