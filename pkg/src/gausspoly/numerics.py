"""Dense linear-algebra kernels built on Jacobi rotations.

Sizes here are small (a few hundred at most), where Jacobi methods are
accurate and simple.  The rotation sweeps run in the compiled core when it
is available (see ``gausspoly._kernels``).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ContractViolation, EmptyKernelError, EmptySpanError, PreconditionError

RANK_TOL = 1e-10
ZERO_TOL = 1e-12
_JACOBI_TOL = 1e-15
_MAX_SWEEPS = 80


@dataclass(frozen=True)
class Subspace:
    """A subspace of ``R^n`` given by an ``n x d`` orthonormal basis."""

    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        B = np.array(self.basis, dtype=np.float64)
        if B.ndim == 1:
            B = B[:, None]
        n, d = B.shape
        if not 1 <= d <= n:
            raise PreconditionError(f"subspace dimension {d} outside [1, {n}]")
        if np.abs(B.T @ B - np.eye(d)).max() > 1e-10:
            raise ContractViolation("basis columns are not orthonormal to 1e-10")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    def project(self, x) -> np.ndarray:
        return self.basis @ (self.basis.T @ np.asarray(x, dtype=np.float64))


def _svd_rows(Gt: np.ndarray, want_v: bool):
    W, Vt, _ = _kernels.jacobi_svd_rows(
        np.ascontiguousarray(Gt, dtype=np.float64), want_v, _JACOBI_TOL, _MAX_SWEEPS
    )
    return W, Vt


def singular_values(M) -> np.ndarray:
    """Singular values of ``M`` in descending order, ``min(rows, cols)`` of them."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if M.size == 0:
        raise PreconditionError("empty matrix")
    # rotate whichever side is shorter: fewer pairs
    Gt = M.T if M.shape[0] >= M.shape[1] else M
    W, _ = _svd_rows(Gt, False)
    s = np.sqrt(np.einsum("ij,ij->i", W, W))
    return np.sort(s)[::-1]


def spectral_norm(M) -> float:
    return float(singular_values(M)[0])


def eigh(S, sym_tol: float = 1e-10):
    """Symmetric eigendecomposition ``S = V diag(w) V^T``, ``w`` descending.

    ``sym_tol`` is the allowed asymmetry, relative to ``max|S|`` (absolute
    when ``S`` has entries of order one or smaller).
    """
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    if S.shape[0] != S.shape[1]:
        raise PreconditionError("eigh needs a square matrix")
    scale = max(1.0, float(np.abs(S).max(initial=0.0)))
    if np.abs(S - S.T).max(initial=0.0) > sym_tol * scale:
        raise ContractViolation("eigh input is not symmetric")
    S = 0.5 * (S + S.T)
    w, V, _ = _kernels.jacobi_eigh(np.ascontiguousarray(S), _JACOBI_TOL, _MAX_SWEEPS)
    order = np.argsort(-w, kind="stable")
    return w[order], np.ascontiguousarray(V[:, order])


def _reorthonormalize(Q: np.ndarray) -> np.ndarray:
    # two passes of modified Gram-Schmidt; input is already nearly orthonormal
    Q = Q.copy()
    for _ in range(2):
        for i in range(Q.shape[1]):
            for j in range(i):
                Q[:, i] -= (Q[:, j] @ Q[:, i]) * Q[:, j]
            Q[:, i] /= np.linalg.norm(Q[:, i])
    return Q


def orthonormal_basis(vectors, rel_tol: float = RANK_TOL) -> Subspace:
    """Orthonormal basis of the span of ``vectors`` (rank revealing).

    ``vectors`` is a sequence of ``n``-vectors or an ``n x k`` matrix whose
    columns are the vectors.  Directions whose singular value falls below
    ``rel_tol`` times the largest are dropped.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        M = np.asarray(vectors, dtype=np.float64)
    else:
        M = np.column_stack([np.asarray(v, dtype=np.float64) for v in vectors])
    if M.size == 0 or np.linalg.norm(M, axis=0).max() <= ZERO_TOL:
        raise EmptySpanError("all input vectors are (numerically) zero")
    W, _ = _svd_rows(M.T, False)
    s = np.sqrt(np.einsum("ij,ij->i", W, W))
    order = np.argsort(-s, kind="stable")
    keep = [i for i in order if s[i] > rel_tol * s[order[0]]]
    Q = (W[keep] / s[keep, None]).T
    return Subspace(_reorthonormalize(Q))


def projector(S: Subspace) -> np.ndarray:
    return S.basis @ S.basis.T


def kernel_basis(M, rel_tol: float = RANK_TOL) -> Subspace:
    """Orthonormal basis of ``{v : M v = 0}`` in ``R^N`` for ``M`` of shape ``n x N``."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    W, Vt = _svd_rows(M.T, True)
    s = np.sqrt(np.einsum("ij,ij->i", W, W))
    smax = s.max(initial=0.0)
    null = np.flatnonzero(s <= rel_tol * smax) if smax > 0 else np.arange(M.shape[1])
    if null.size == 0:
        raise EmptyKernelError("matrix has full column rank; kernel is trivial")
    return Subspace(_reorthonormalize(Vt[null].T))


def rank(M, rel_tol: float = RANK_TOL) -> int:
    s = singular_values(M)
    return int(np.sum(s > rel_tol * s[0])) if s[0] > 0 else 0


def orthogonal_complement(S: Subspace) -> Subspace | None:
    """Deterministic orthonormal frame of ``S^perp``.

    Standard basis vectors are projected off ``S`` (and off the frame built so
    far) in index order; each is kept when its residual norm exceeds 1e-6.
    """
    n = S.ambient
    if S.dim == n:
        return None
    Q = [S.basis[:, i] for i in range(S.dim)]
    frame = []
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        for _ in range(2):
            for q in Q:
                v -= (q @ v) * q
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            v /= norm
            Q.append(v)
            frame.append(v)
        if len(frame) == n - S.dim:
            break
    return Subspace(np.column_stack(frame))
