"""Support function, in-radius sandwich, compressibility and the event Omega.

For the symmetric body ``P = conv{+-X_j}`` the in-radius is
``min_{|y|=1} h(y)`` with ``h(y) = max_j |<X_j, y>| = ||A^T y||_inf``.
Computing it exactly is hard in general, so it is bracketed: the spectral
bound ``s_min(A^T)/sqrt(N)`` from below and sampled, locally improved
directions from above.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .ensemble import Ensemble
from .errors import DegeneracyError, EmptyKernelError, PreconditionError
from .l1norm import CoefficientVector, minkowski_norm
from .numerics import eigh, kernel_basis, orthonormal_basis, singular_values

DEFAULT_C = 0.01
DEFAULT_C1 = 1.0
DEFAULT_SUBSET_BUDGET = 10**5


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))


def support_function(E: Ensemble, y) -> float:
    """``h(y) = max_j |<X_j, y>|``."""
    return float(np.abs(E.At @ np.asarray(y, dtype=np.float64)).max(initial=0.0))


def inradius_lower(E: Ensemble) -> float:
    """Spectral lower bound ``s_min(A^T) / sqrt(N)`` on the in-radius."""
    s = singular_values(E.A)
    if s[-1] <= 1e-10 * s[0]:
        raise DegeneracyError("A is rank deficient; the polytope has empty interior")
    return float(s[-1] / math.sqrt(E.N))


def _ascend(E: Ensemble, y: np.ndarray, max_steps: int) -> tuple[float, np.ndarray]:
    # y <- normalized dual certificate of ||y||_P.  The certificate u has
    # ||A^T u||_inf <= 1, so h(u/|u|) <= 1/|u|, and |u| >= ||y||_P grows.
    best = support_function(E, y)
    best_y = y
    for _ in range(max_steps):
        cert = minkowski_norm(E, y)
        u = cert.dual
        nu = float(np.linalg.norm(u))
        if nu == 0.0:
            break
        w = u / nu
        h = support_function(E, w)
        if h >= best * (1.0 - 1e-12):
            break
        best, best_y, y = h, w, w
    return best, best_y


def inradius_upper(
    E: Ensemble,
    budget: int = 1000,
    seed: int = 0,
    directions=None,
    descent: bool = True,
    descent_starts: int = 8,
    max_steps: int = 50,
) -> float:
    """Upper bound on the in-radius: ``min h(y)`` over unit directions tried.

    ``budget`` Gaussian directions are drawn (or ``directions`` are used as
    given); with ``descent`` the ``descent_starts`` best are refined by
    repeatedly replacing ``y`` with the normalized dual certificate of
    ``||y||_P``, which never increases ``h``.  Every direction evaluated is a
    valid certificate, so the return value is always an upper bound.
    """
    if directions is None:
        if budget < 1:
            raise PreconditionError("budget must be at least 1")
        D = _rng(seed).standard_normal((int(budget), E.n))
    else:
        D = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    norms = np.linalg.norm(D, axis=1)
    D = D[norms > 0] / norms[norms > 0, None]
    if D.shape[0] == 0:
        raise PreconditionError("no nonzero direction supplied")
    h = np.abs(D @ E.A).max(axis=1)
    best = float(h.min())
    if descent:
        for i in np.argsort(h, kind="stable")[:descent_starts]:
            best = min(best, _ascend(E, D[i], max_steps)[0])
    return best


def relative_inradius_bounds(
    E: Ensemble, I, budget: int = 1000, seed: int = 0
) -> tuple[float, float]:
    """In-radius sandwich of ``conv{+-X_j : j in I}`` inside its own span."""
    I = np.asarray(sorted(set(int(i) for i in I)), dtype=np.int64)
    if I.size == 0:
        raise PreconditionError("index set must be nonempty")
    cols = E.A[:, I]
    Q = orthonormal_basis(cols).basis
    sub = Ensemble.from_matrix(Q.T @ cols)
    lower = inradius_lower(sub)
    upper = inradius_upper(sub, budget=budget, seed=seed)
    return lower, max(upper, lower)


def _keep_count(N: int, delta: float) -> int:
    return max(1, math.ceil(delta * N - 1e-9))


def compressibility_distance(beta, delta: float) -> float:
    """Distance from ``beta / |beta|`` to the ``ceil(delta N)``-sparse vectors."""
    b = np.asarray(getattr(beta, "beta", beta), dtype=np.float64).ravel()
    nb = np.linalg.norm(b)
    if nb == 0.0:
        raise PreconditionError("beta must be nonzero")
    keep = _keep_count(b.size, delta)
    mags = np.sort(np.abs(b / nb))
    tail = mags[: max(0, b.size - keep)]
    return float(np.sqrt(np.sum(tail * tail)))


def _distances(V: np.ndarray, keep: int) -> np.ndarray:
    # rows of V are unit vectors; tail norm after the top `keep` entries
    mags = np.sort(np.abs(V), axis=1)[:, : V.shape[1] - keep]
    return np.sqrt(np.einsum("ij,ij->i", mags, mags))


@dataclass
class KernelScanReport:
    min_distance: float
    violations: int
    random_min: float
    adversarial_min: float
    probes: int
    keep: int
    probe_vectors: np.ndarray | None = field(default=None, repr=False)


def _closest_to_support(K: np.ndarray, S: np.ndarray) -> np.ndarray:
    # unit kernel vector maximizing its mass on S: top singular vector of K_S
    KS = K[S]
    w, V = eigh(KS @ KS.T)
    c = KS.T @ V[:, 0]
    v = K @ c
    return v / np.linalg.norm(v)


def kernel_incompressibility_scan(
    E: Ensemble,
    delta: float,
    rho: float,
    trials: int,
    seed: int = 0,
    adversarial: int = 256,
    keep_probes: bool = False,
) -> KernelScanReport:
    """Hunt for compressible unit vectors in ``ker(A)``.

    ``trials`` uniform unit kernel vectors, then an adversarial pass: starting
    from ``adversarial`` supports (the top supports of the worst random probes
    followed by uniform random supports) the kernel vector with most mass on
    the support is formed and the support re-chosen from its largest entries,
    until the support stops changing.
    """
    if E.N <= E.n:
        raise EmptyKernelError("N = n: the kernel of A is trivial")
    K = kernel_basis(E.A).basis
    N, k = K.shape
    keep = _keep_count(N, delta)
    rng = _rng(seed)
    probes = []
    V = rng.standard_normal((int(trials), k)) @ K.T
    if trials:
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        rand_d = _distances(V, keep)
        random_min = float(rand_d.min())
    else:
        rand_d = np.empty(0)
        random_min = math.inf
    if keep_probes:
        probes.append(V)
    starts = []
    for i in np.argsort(rand_d, kind="stable")[: adversarial // 2]:
        starts.append(np.sort(np.argsort(-np.abs(V[i]), kind="stable")[:keep]))
    while len(starts) < adversarial:
        starts.append(np.sort(rng.choice(N, size=keep, replace=False)))
    adv = []
    for S in starts:
        seen = set()
        while True:
            v = _closest_to_support(K, S)
            adv.append(v)
            key = tuple(S)
            seen.add(key)
            S = np.sort(np.argsort(-np.abs(v), kind="stable")[:keep])
            if tuple(S) in seen:
                break
    A = np.array(adv) if adv else np.empty((0, N))
    adv_d = _distances(A, keep) if adv else np.empty(0)
    adversarial_min = float(adv_d.min()) if adv else math.inf
    if keep_probes:
        probes.append(A)
    all_d = np.concatenate([rand_d, adv_d])
    return KernelScanReport(
        min_distance=float(all_d.min()) if all_d.size else math.inf,
        violations=int(np.sum(all_d < rho)),
        random_min=random_min,
        adversarial_min=adversarial_min,
        probes=int(all_d.size),
        keep=keep,
        probe_vectors=np.vstack(probes) if keep_probes else None,
    )


@dataclass
class EventReport:
    """Per-condition verdicts and slacks for the event Omega.

    ``margins[name]`` is ``None`` when the condition is vacuous (no subset
    ``J`` with ``1 <= |J| <= c n``); a vacuous condition holds.
    """

    holds: dict
    margins: dict
    constants_used: dict
    subsets_checked: int = 0
    exhaustive: bool = True

    @property
    def all_hold(self) -> bool:
        return all(self.holds.values())

    def as_dict(self) -> dict:
        return {
            "holds": dict(self.holds),
            "margins": dict(self.margins),
            "constants_used": dict(self.constants_used),
            "subsets_checked": self.subsets_checked,
            "exhaustive": self.exhaustive,
            "all_hold": self.all_hold,
        }


def _band(n: int, size: int) -> float:
    return math.sqrt(size / n) * math.log(n / size)


def event_sparse_singular(
    E: Ensemble, c: float = DEFAULT_C, subset_budget: int = DEFAULT_SUBSET_BUDGET, seed: int = 0
) -> EventReport:
    """Check the three conditions: ``||A|| <= 4 sqrt N``,
    ``s_min(A^T) >= (sqrt N - sqrt n)/2`` and, for ``1 <= |J| <= c n``,
    ``sqrt(n)(1 - b) <= s_min(A_J) <= s_max(A_J) <= sqrt(n)(1 + b)`` with
    ``b = sqrt(|J|/n) log(n/|J|)``.
    """
    if not 0 < c <= 0.01:
        raise PreconditionError(f"c must lie in (0, 1/100], got {c}")
    n, N = E.n, E.N
    s = singular_values(E.A)
    m1 = 4.0 * math.sqrt(N) - float(s[0])
    m2 = float(s[-1]) - 0.5 * (math.sqrt(N) - math.sqrt(n))
    max_size = min(N, int(math.floor(c * n + 1e-12)))
    total = sum(math.comb(N, j) for j in range(1, max_size + 1))
    m3 = None
    checked = 0
    exhaustive = True
    if max_size >= 1:
        rootn = math.sqrt(n)
        norms = np.linalg.norm(E.A, axis=0)
        m3 = math.inf

        def slack(J) -> float:
            size = len(J)
            b = _band(n, size)
            if size == 1:
                lo = hi = float(norms[J[0]])
            else:
                sv = singular_values(E.A[:, list(J)])
                lo, hi = float(sv[-1]), float(sv[0])
            return min(lo - rootn * (1 - b), rootn * (1 + b) - hi)

        if total <= subset_budget:
            # singletons in one vectorized step, larger sets one by one
            b1 = _band(n, 1)
            m3 = float(min(np.min(norms - rootn * (1 - b1)), np.min(rootn * (1 + b1) - norms)))
            checked = N
            for size in range(2, max_size + 1):
                for J in combinations(range(N), size):
                    m3 = min(m3, slack(J))
                    checked += 1
        else:
            exhaustive = False
            rng = _rng(seed)
            for _ in range(int(subset_budget)):
                size = int(rng.integers(1, max_size + 1))
                J = np.sort(rng.choice(N, size=size, replace=False))
                m3 = min(m3, slack(J))
                checked += 1
    margins = {"spectral_norm": m1, "smallest_singular": m2, "sparse_subsets": m3}
    holds = {k: (v is None or v >= 0.0) for k, v in margins.items()}
    return EventReport(holds, margins, {"c": c, "subset_budget": subset_budget}, checked, exhaustive)


def approx_residual(
    E: Ensemble, beta, T, c: float = DEFAULT_C, C1: float = DEFAULT_C1
) -> tuple[float, float]:
    """``||(<X_l, Z>)_{l in T} - n beta_T||`` for ``Z = A beta`` and its bound

    ``C1 n |beta_T| log(n/|T|) sqrt(|T|/n) + 16 N |beta_{T^c}|``.
    """
    b = np.asarray(getattr(beta, "beta", beta), dtype=np.float64).ravel()
    if b.size != E.N:
        raise PreconditionError(f"beta has length {b.size}, expected {E.N}")
    T = np.asarray(sorted(set(int(t) for t in T)), dtype=np.int64)
    if T.size == 0:
        raise PreconditionError("T must be nonempty")
    if T.size > c * E.n + 1e-12:
        raise PreconditionError(f"|T| = {T.size} exceeds c n = {c * E.n:g}")
    Z = E.A @ b
    residual = float(np.linalg.norm(E.At[T] @ Z - E.n * b[T]))
    mask = np.ones(E.N, dtype=bool)
    mask[T] = False
    n, t = E.n, T.size
    bound = C1 * n * float(np.linalg.norm(b[T])) * math.log(n / t) * math.sqrt(t / n)
    bound += 16.0 * E.N * float(np.linalg.norm(b[mask]))
    return residual, bound


def t_sigma_set(beta, tau: float) -> np.ndarray:
    """Indices ``j`` (0-based) with ``|beta_j| >= tau``."""
    if not tau > 0:
        raise PreconditionError("tau must be positive")
    b = np.asarray(beta.beta if isinstance(beta, CoefficientVector) else beta, dtype=np.float64)
    return np.flatnonzero(np.abs(b) >= tau)
