"""Nets on the Grassmannian ``G(n, d)`` and the projection decomposition.

Distances are spectral norms of projector differences.  For equal
dimensions ``||P_E - P_F|| = ||(I - P_E) Q_F||`` where ``Q_F`` is any
orthonormal basis of ``F``; that form is used throughout since it stays
accurate when the distance is tiny.

Two net constructions are provided.

* ``greedy``: farthest-point selection from random subspaces, followed by
  an audit on a fresh batch.  Cheap and small, but only audited.
* ``lattice``: every subspace is matched to the span of its orthonormal
  basis rounded to a grid of spacing ``h <= 2 eps / sqrt(n d)``.  With
  ``Q~`` the rounded basis, ``||P_F - P_{span Q~}|| = ||(I - P~) (Q - Q~)||
  <= ||Q - Q~||_F <= (h/2) sqrt(n d) <= eps``, so coverage of all of
  ``G(n, d)`` is certified.  The net is finite (grid points in the cube) and
  its entries are materialized on first use.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import Ensemble
from .errors import (
    ContractViolation,
    CoverageFailure,
    DimensionMismatchError,
    NetCoverageViolation,
    PreconditionError,
)
from .numerics import Subspace, orthogonal_complement, orthonormal_basis, spectral_norm

DEFAULT_TAIL_C = 10.0
_ABS_RANK_TOL = 1e-10


def subspace_distance(E: Subspace, F: Subspace) -> float:
    """``||P_E - P_F||`` (spectral)."""
    if E.ambient != F.ambient:
        raise DimensionMismatchError("subspaces live in different ambient spaces")
    if E.dim != F.dim:
        return spectral_norm(E.basis @ E.basis.T - F.basis @ F.basis.T)
    R = F.basis - E.basis @ (E.basis.T @ F.basis)
    return spectral_norm(R)


def _batch_distances(stack: np.ndarray, Q: np.ndarray) -> np.ndarray:
    # stack: (M, n, d) orthonormal bases; distance of each to span(Q)
    R = Q[None, :, :] - stack @ (np.swapaxes(stack, 1, 2) @ Q[None, :, :])
    G = np.swapaxes(R, 1, 2) @ R
    lam = np.linalg.eigvalsh(G)[:, -1]
    return np.sqrt(np.maximum(lam, 0.0))


def random_subspace(n: int, d: int, rng: np.random.Generator) -> Subspace:
    """Uniform element of ``G(n, d)`` (orthonormalized Gaussian matrix)."""
    return orthonormal_basis(rng.standard_normal((n, d)))


@dataclass
class GrassmannNet:
    """An ``epsilon``-net of ``G(n, d)``.

    For ``kind == "lattice"`` the ``entries`` list holds the representatives
    materialized so far; queries add to it, and ``nearest`` returns the
    rounding representative, which is within ``epsilon`` but not always the
    closest materialized entry (an exact member is returned as itself).
    """

    n: int
    d: int
    epsilon: float
    entries: list = field(default_factory=list, repr=False)
    coverage_audit: float = math.nan
    kind: str = "greedy"
    spacing: float = math.nan
    _keys: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for S in self.entries:
            if (S.ambient, S.dim) != (self.n, self.d):
                raise DimensionMismatchError("net entries must share (n, d)")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def log10_size(self) -> float:
        """``log10`` of the cardinality (of the full grid for lattice nets)."""
        if self.kind == "lattice":
            per_entry = 2 * math.floor(1.0 / self.spacing + 1e-9) + 1
            return self.n * self.d * math.log10(per_entry)
        return math.log10(max(1, len(self.entries)))

    def _stack(self) -> np.ndarray:
        return np.stack([S.basis for S in self.entries])

    def _lattice_rep(self, F: Subspace) -> int:
        grid = np.rint(F.basis / self.spacing).astype(np.int64)
        key = grid.tobytes()
        idx = self._keys.get(key)
        if idx is None:
            idx = len(self.entries)
            self.entries.append(orthonormal_basis(grid * self.spacing))
            self._keys[key] = idx
        return idx

    def nearest(self, F: Subspace) -> tuple[int, float]:
        if (F.ambient, F.dim) != (self.n, self.d):
            raise DimensionMismatchError(
                f"query has (n, d) = ({F.ambient}, {F.dim}), net has ({self.n}, {self.d})"
            )
        if self.kind == "lattice":
            if self.entries:
                # an exact member of the net is its own nearest entry
                dist = _batch_distances(self._stack(), F.basis)
                hit = int(np.argmin(dist))
                if dist[hit] <= 1e-12:
                    return hit, float(dist[hit])
            idx = self._lattice_rep(F)
            return idx, subspace_distance(self.entries[idx], F)
        if not self.entries:
            raise PreconditionError("net is empty")
        dist = _batch_distances(self._stack(), F.basis)
        idx = int(np.argmin(dist))
        return idx, float(dist[idx])

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "d": self.d,
                "epsilon": self.epsilon,
                "kind": self.kind,
                "spacing": None if math.isnan(self.spacing) else self.spacing,
                "coverage_audit": None if math.isnan(self.coverage_audit) else self.coverage_audit,
                "entries": [[float(v) for v in S.basis.ravel()] for S in self.entries],
                "grid_keys": [
                    [int(g) for g in np.frombuffer(key, dtype=np.int64)]
                    for key, _ in sorted(self._keys.items(), key=lambda kv: kv[1])
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GrassmannNet":
        obj = json.loads(text)
        n, d = int(obj["n"]), int(obj["d"])
        entries = [Subspace(np.asarray(e, dtype=np.float64).reshape(n, d)) for e in obj["entries"]]
        net = cls(
            n,
            d,
            float(obj["epsilon"]),
            entries,
            math.nan if obj.get("coverage_audit") is None else float(obj["coverage_audit"]),
            obj.get("kind", "greedy"),
            math.nan if obj.get("spacing") is None else float(obj["spacing"]),
        )
        if net.kind == "lattice":
            for i, grid in enumerate(obj.get("grid_keys", [])):
                net._keys[np.asarray(grid, dtype=np.int64).tobytes()] = i
        return net


def _check_params(n: int, d: int, epsilon: float) -> None:
    if not (1 <= d and 2 * d <= n):
        raise PreconditionError(f"need 1 <= d <= n/2, got n={n}, d={d}")
    if not 0 < epsilon <= 0.25:
        raise PreconditionError(f"epsilon must lie in (0, 1/4], got {epsilon}")


def lattice_net(n: int, d: int, epsilon: float) -> GrassmannNet:
    """Certified net from rounding bases to the grid ``h Z^{n x d}``."""
    _check_params(n, d, epsilon)
    h = 2.0 * epsilon / math.sqrt(n * d) * (1.0 - 1e-9)
    return GrassmannNet(n, d, epsilon, [], 0.5 * h * math.sqrt(n * d), "lattice", h)


def build_net(
    n: int,
    d: int,
    epsilon: float,
    sample_budget: int,
    seed: int = 0,
    audit_size: int | None = None,
    method: str = "greedy",
) -> GrassmannNet:
    """Greedy farthest-point net from ``sample_budget`` random subspaces.

    Points are added while some sample is farther than ``epsilon / 2`` from
    the net, so entries are pairwise more than ``epsilon / 2`` apart.  A fresh
    batch of ``audit_size`` samples (default ``sample_budget``) must then lie
    within ``epsilon`` of the net, otherwise :class:`CoverageFailure` is raised
    with the radius achieved.  ``method="lattice"`` returns :func:`lattice_net`.
    """
    if method == "lattice":
        return lattice_net(n, d, epsilon)
    if method != "greedy":
        raise PreconditionError(f"unknown net method {method!r}")
    _check_params(n, d, epsilon)
    if sample_budget < 1:
        raise PreconditionError("sample_budget must be at least 1")
    rng = np.random.default_rng(seed)
    pool = np.stack([random_subspace(n, d, rng).basis for _ in range(sample_budget)])
    chosen = [0]
    gap = _batch_distances(pool, pool[0])
    while True:
        far = int(np.argmax(gap))
        if gap[far] <= 0.5 * epsilon:
            break
        chosen.append(far)
        gap = np.minimum(gap, _batch_distances(pool, pool[far]))
    entries = [Subspace(pool[i]) for i in chosen]
    stack = pool[chosen]
    for i in range(1, len(chosen)):
        if _batch_distances(stack[:i], stack[i]).min() <= 0.5 * epsilon:
            raise ContractViolation("greedy net lost its packing property")
    audit = audit_size if audit_size is not None else sample_budget
    radius = 0.0
    for _ in range(audit):
        Q = random_subspace(n, d, rng).basis
        radius = max(radius, float(_batch_distances(stack, Q).min()))
    net = GrassmannNet(n, d, epsilon, entries, radius, "greedy")
    if radius > epsilon:
        raise CoverageFailure(
            f"audited covering radius {radius:.4f} exceeds epsilon {epsilon}", achieved_radius=radius
        )
    return net


@dataclass(frozen=True)
class DecompositionStep:
    """Term ``D_j P_{E_{i_j}}`` of the expansion of ``P_F``.

    ``residual`` is ``||P_F - sum_{l <= j} D_l P_{E_{i_l}}||`` after this term.
    """

    index: int
    D: np.ndarray = field(repr=False)
    norm_bound: float
    norm: float
    distance: float
    residual: float


def _span_tilde(PE: np.ndarray, QF: np.ndarray) -> np.ndarray | None:
    # E^perp cap (E + F) = range((I - P_E) Q_F), rank at absolute tolerance
    R = QF - PE @ QF
    top = spectral_norm(R)
    if top <= _ABS_RANK_TOL:
        return None
    return orthonormal_basis(R, rel_tol=_ABS_RANK_TOL / top).basis


def _pad(E: Subspace, Ft: np.ndarray | None, d: int) -> Subspace:
    # F* := F~ plus the first frame vectors of (E + F~)^perp, dimension d
    if Ft is not None and Ft.shape[1] == d:
        return Subspace(Ft)
    both = E.basis if Ft is None else np.column_stack([E.basis, Ft])
    frame = orthogonal_complement(Subspace(both)).basis
    have = 0 if Ft is None else Ft.shape[1]
    extra = frame[:, : d - have]
    return Subspace(extra if Ft is None else np.column_stack([Ft, extra]))


def decompose_projection(net: GrassmannNet, F: Subspace, m: int) -> list[DecompositionStep]:
    """First ``m`` terms of ``P_F = sum_j (prod_{l<j} B_l) A~_j P_{E_{i_j}}``.

    At each step ``E`` is the net entry matched to the current ``F_{j-1}``,
    ``Delta = P_{F_{j-1}} - P_E``, ``A~ = I + Delta P_{E+F}``,
    ``B = Delta P_{E+F}`` and ``F_j = F*``.  Step bounds ``||D_j|| <=
    2 eps^(j-1)`` and residual bounds ``2 eps^m / (1 - eps)`` are asserted.
    """
    if m < 1:
        raise PreconditionError("m must be at least 1")
    eps = net.epsilon
    n = net.n
    PF0 = F.basis @ F.basis.T
    prod = np.eye(n)
    total = np.zeros((n, n))
    cur = F
    steps = []
    for j in range(1, m + 1):
        idx, dist = net.nearest(cur)
        if dist > eps + 1e-12:
            raise NetCoverageViolation(
                f"step {j}: nearest net entry at distance {dist:.4g} > epsilon {eps}"
            )
        E = net.entries[idx]
        PE = E.basis @ E.basis.T
        delta = cur.basis @ cur.basis.T - PE
        Ft = _span_tilde(PE, cur.basis)
        PEF = PE if Ft is None else PE + Ft @ Ft.T
        B = delta @ PEF
        D = prod @ (np.eye(n) + B)
        total = total + D @ PE
        bound = 2.0 * eps ** (j - 1)
        dn = spectral_norm(D)
        if dn > bound + 1e-9:
            raise ContractViolation(f"step {j}: ||D|| = {dn:.6g} exceeds {bound:.6g}")
        residual = spectral_norm(PF0 - total)
        if residual > 2.0 * eps**j / (1.0 - eps) + 1e-8:
            raise ContractViolation(f"step {j}: residual {residual:.3e} exceeds its bound")
        steps.append(DecompositionStep(idx, D, bound, dn, dist, residual))
        prod = prod @ B
        cur = _pad(E, Ft, net.d)
    return steps


def residual_bound(epsilon: float, m: int) -> float:
    return 2.0 * epsilon**m / (1.0 - epsilon)


def projection_tail_counts(
    E: Ensemble, F: Subspace, s: float, C: float = DEFAULT_TAIL_C
) -> tuple[int, float]:
    """``#{j : ||P_F X_j|| > 8 s sqrt(d)}`` and the bound ``2 C^2 N log2(s) / s^2``."""
    if s < C:
        raise PreconditionError(f"s = {s} is below the constant C = {C}")
    if F.ambient != E.n:
        raise DimensionMismatchError("subspace and ensemble dimensions differ")
    proj = np.linalg.norm(F.basis.T @ E.A, axis=0)
    count = int(np.sum(proj > 8.0 * s * math.sqrt(F.dim)))
    return count, 2.0 * C * C * E.N * math.log2(s) / (s * s)
