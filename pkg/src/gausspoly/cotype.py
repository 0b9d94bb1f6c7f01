"""Rademacher sign averages, cotype estimates and related statistics.

A family ``y_1, ..., y_k`` has cotype ratio

    (sum_i ||y_i||^q / E_sigma ||sum_i sigma_i y_i||^q)^(1/q),

the least constant for which the cotype-``q`` inequality holds for that
family.  Exact mode enumerates signs; since every norm is even, only the
``2^(k-1)`` sign vectors with ``sigma_1 = +1`` are visited, in Gray-code
order so consecutive sums differ in one term (LP warm starts benefit).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import Ensemble
from .errors import (
    DegeneracyError,
    DimensionMismatchError,
    ModeError,
    PreconditionError,
    SamplingFailure,
)
from .l1norm import norm_values
from .numerics import Subspace, eigh, orthonormal_basis

EXACT_CAP = 20
LP_EXACT_CAP = 16
DEFAULT_DYAD_C = 0.01
DEFAULT_J_CTILDE = 1.0
_CHUNK = 1 << 15


class NormOracle:
    """A norm on ``R^dim``.  Subclasses implement :meth:`norms` (row-wise)."""

    name = "generic"

    def norms(self, X) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> float:
        return float(self.norms(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0])


class EuclideanNorm(NormOracle):
    name = "euclidean"

    def norms(self, X):
        return np.linalg.norm(np.atleast_2d(X), axis=1)


class SupNorm(NormOracle):
    name = "sup"

    def norms(self, X):
        return np.abs(np.atleast_2d(X)).max(axis=1)


class PolytopeNorm(NormOracle):
    """``||.||_P`` for ``P = conv{+-X_j}``; rows are solved with warm starts."""

    name = "polytope"

    def __init__(self, E: Ensemble):
        self.E = E

    def norms(self, X):
        return norm_values(self.E, X)


class FunctionNorm(NormOracle):
    """Wrap a scalar function ``x -> ||x||``."""

    def __init__(self, fn, name: str = "function"):
        self.fn = fn
        self.name = name

    def norms(self, X):
        return np.array([float(self.fn(x)) for x in np.atleast_2d(X)])


class DirectSumNorm(NormOracle):
    """``l_q`` sum of component norms over consecutive coordinate blocks."""

    name = "lq-sum"

    def __init__(self, components, dims, q: float):
        if len(components) != len(dims) or not components:
            raise PreconditionError("need one block size per component")
        if q < 1:
            raise PreconditionError("q must be at least 1")
        self.components = list(components)
        self.cuts = np.cumsum([0] + [int(d) for d in dims])
        self.q = float(q)

    def norms(self, X):
        X = np.atleast_2d(X)
        if X.shape[1] != self.cuts[-1]:
            raise DimensionMismatchError(f"expected vectors of length {self.cuts[-1]}")
        parts = np.column_stack(
            [c.norms(X[:, a:b]) for c, a, b in zip(self.components, self.cuts[:-1], self.cuts[1:])]
        )
        return np.sum(parts**self.q, axis=1) ** (1.0 / self.q)


def validate_oracle(oracle: NormOracle, dim: int, probes: int = 10, seed: int = 0, tol: float = 1e-9):
    """Spot-check homogeneity and the triangle inequality on random triples."""
    rng = np.random.default_rng(seed)
    for _ in range(probes):
        x, y = rng.standard_normal((2, dim))
        lam = float(rng.standard_normal())
        nx, ny, nlx, nxy = oracle.norms(np.array([x, y, lam * x, x + y]))
        scale = max(1.0, nx, ny)
        if nx < 0 or abs(nlx - abs(lam) * nx) > tol * scale * max(1.0, abs(lam)):
            raise PreconditionError(f"oracle {oracle.name!r} fails homogeneity")
        if nxy > nx + ny + tol * scale:
            raise PreconditionError(f"oracle {oracle.name!r} fails the triangle inequality")
    return oracle


def gray_signs(k: int) -> np.ndarray:
    """All ``2^(k-1)`` sign vectors with ``sigma_1 = +1``, Gray-code order."""
    i = np.arange(1 << (k - 1), dtype=np.int64)
    g = i ^ (i >> 1)
    bits = (g[:, None] >> np.arange(k - 1, dtype=np.int64)[None, :]) & 1
    return np.column_stack([np.ones(i.size), 1.0 - 2.0 * bits])


def _family(Y) -> np.ndarray:
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if Y.shape[0] < 1:
        raise PreconditionError("need k >= 1 vectors")
    return Y


def sign_sum_norms(oracle: NormOracle, Y, mode: str = "exact", trials: int = 10000, seed: int = 0):
    """Norms ``||sum sigma_i y_i||`` over the sign vectors of the chosen mode."""
    Y = _family(Y)
    k = Y.shape[0]
    if mode == "exact":
        cap = LP_EXACT_CAP if isinstance(oracle, PolytopeNorm) else EXACT_CAP
        if k > cap:
            raise ModeError(f"exact enumeration supports k <= {cap}, got k={k}")
        S = gray_signs(k)
    elif mode in ("mc", "monte-carlo"):
        if trials < 2:
            raise PreconditionError("monte-carlo mode needs at least 2 trials")
        rng = np.random.default_rng(seed)
        S = rng.choice([-1.0, 1.0], size=(int(trials), k))
    else:
        raise ModeError(f"unknown mode {mode!r}")
    out = np.empty(S.shape[0])
    for a in range(0, S.shape[0], _CHUNK):
        out[a : a + _CHUNK] = oracle.norms(S[a : a + _CHUNK] @ Y)
    return out


def _mean_se(values: np.ndarray, mode: str) -> tuple[float, float]:
    mean = float(values.mean())
    if mode == "exact":
        return mean, 0.0
    return mean, float(values.std(ddof=1) / math.sqrt(values.size))


def avg_sign_norm(oracle: NormOracle, Y, mode: str = "exact", trials: int = 10000, seed: int = 0):
    """``(E_sigma ||sum sigma_i y_i||, standard error)``; the error is 0 when exact."""
    return _mean_se(sign_sum_norms(oracle, Y, mode, trials, seed), mode)


@dataclass(frozen=True)
class CotypeEstimate:
    """Cotype estimate for one family.

    ``raw_ratio`` is the family's own ratio, which may be below 1;
    ``constant = max(1, raw_ratio)`` since singletons force ``C_q >= 1``.
    """

    q: float
    constant: float
    stderr: float
    method: str
    trials: int
    raw_ratio: float = math.nan
    k: int = 0

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "constant": self.constant,
            "raw_ratio": self.raw_ratio,
            "stderr": self.stderr,
            "method": self.method,
            "trials": self.trials,
            "k": self.k,
        }


def cotype_constant(
    oracle: NormOracle, Y, q: float = 2.0, mode: str = "exact", trials: int = 10000, seed: int = 0
) -> CotypeEstimate:
    if q < 2:
        raise PreconditionError(f"cotype exponent must be >= 2, got {q}")
    Y = _family(Y)
    num = float(np.sum(oracle.norms(Y) ** q))
    if num == 0.0:
        raise DegeneracyError("all vectors have zero norm; the ratio is undefined")
    vals = sign_sum_norms(oracle, Y, mode, trials, seed) ** q
    den, den_se = _mean_se(vals, mode)
    raw = (num / den) ** (1.0 / q)
    # delta method: d(raw)/d(den) = -raw / (q den)
    se = raw * den_se / (q * den)
    method = "exact-enumeration" if mode == "exact" else "monte-carlo"
    return CotypeEstimate(q, max(1.0, raw), se, method, int(vals.size), raw, Y.shape[0])


@dataclass(frozen=True)
class DyadicBands:
    """Eigenbands ``E_p`` (eigenvalues in ``(2^p, 2^(p+1)]``) of ``sum y_i y_i^T``."""

    bands: dict = field(repr=False)
    covariance: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def dims(self) -> dict:
        return {p: S.dim for p, S in self.bands.items()}


def dyadic_exponent(x: float) -> int:
    """The integer ``p`` with ``x in (2^p, 2^(p+1)]``, for ``x > 0``."""
    m, e = math.frexp(x)
    return e - 2 if m == 0.5 else e - 1


def _unit_family(Y) -> np.ndarray:
    Y = _family(Y)
    if np.abs(np.linalg.norm(Y, axis=1) - 1.0).max() > 1e-9:
        raise PreconditionError("vectors must have unit Euclidean length")
    return Y


def dyadic_bands(Y) -> DyadicBands:
    Y = _unit_family(Y)
    cov = Y.T @ Y
    w, V = eigh(cov)
    groups: dict[int, list[int]] = {}
    for i, lam in enumerate(w):
        if lam > 1e-12:
            groups.setdefault(dyadic_exponent(float(lam)), []).append(i)
    bands = {p: Subspace(V[:, idx]) for p, idx in sorted(groups.items())}
    return DyadicBands(bands, cov, w)


@dataclass(frozen=True)
class DyadicVerdict:
    hypothesis_holds: bool
    probability: float
    alternative_a: bool
    alternative_b: bool
    margins: dict


def dyaddecomp_check(Y, Z, t: float, c: float = DEFAULT_DYAD_C) -> DyadicVerdict:
    """Evaluate the sign-probability hypothesis and the two alternatives.

    (a) ``||P_span(Y) Z|| >= c t sqrt(k) / log^0.5 k``;
    (b) some band ``E_p``, ``1 <= p <= log2 k``, with
    ``||P_{E_p} Z|| >= c t sqrt(dim E_p) / log^1.5 k``.
    Margins are the best slack of each alternative (``-inf`` for (b) when no
    band qualifies).
    """
    Y = _unit_family(Y)
    Z = np.asarray(Z, dtype=np.float64).ravel()
    k, n = Y.shape
    if not 2 <= k <= min(n, EXACT_CAP):
        raise PreconditionError(f"need 2 <= k <= min(n, {EXACT_CAP}), got k={k}, n={n}")
    if Z.size != n:
        raise DimensionMismatchError("Z has the wrong length")
    if t < 1:
        raise PreconditionError("t must be at least 1")
    inner = Y @ Z
    vals = np.abs(gray_signs(k) @ inner)
    prob = float(np.mean(vals >= t * math.sqrt(k)))
    holds = prob >= float(k) ** -100
    logk = math.log(k)
    span = orthonormal_basis(Y.T)
    ma = float(np.linalg.norm(span.basis.T @ Z)) - c * t * math.sqrt(k) / math.sqrt(logk)
    mb = -math.inf
    for p, S in dyadic_bands(Y).bands.items():
        if 1 <= p <= math.log2(k):
            slack = float(np.linalg.norm(S.basis.T @ Z)) - c * t * math.sqrt(S.dim) / logk**1.5
            mb = max(mb, slack)
    return DyadicVerdict(holds, prob, ma >= 0, mb >= 0, {"a": ma, "b": mb})


def j_set(
    E: Ensemble,
    Y,
    t: float,
    fraction_override: float | None = None,
    C_tilde: float = DEFAULT_J_CTILDE,
) -> np.ndarray:
    """Indices ``j`` (0-based) in ``J(t)``.

    Condition (1): at least ``max(1, ceil(f 2^k))`` signs with
    ``|<X_j, sum sigma_i y_i>| >= t sqrt(k)``, ``f = k^-100`` unless overridden.
    Condition (2): ``max_sigma |<X_j, sum sigma_i y_i>| = sum_i |<X_j, y_i>|
    >= C_tilde k^11``.
    """
    Y = _unit_family(Y)
    k = Y.shape[0]
    if not 2 <= k <= EXACT_CAP:
        raise ModeError(f"j_set enumerates signs; need 2 <= k <= {EXACT_CAP}, got {k}")
    f = float(k) ** -100 if fraction_override is None else float(fraction_override)
    need = max(1, math.ceil(f * 2**k))
    G = E.At @ Y.T
    S = gray_signs(k)
    counts = np.zeros(E.N, dtype=np.int64)
    thr = t * math.sqrt(k)
    for a in range(0, S.shape[0], _CHUNK):
        counts += np.sum(np.abs(G @ S[a : a + _CHUNK].T) >= thr, axis=1)
    counts *= 2  # sigma and -sigma give the same absolute value
    cond1 = counts >= need
    cond2 = np.abs(G).sum(axis=1) >= C_tilde * float(k) ** 11
    return np.flatnonzero(cond1 | cond2)


def m_delta_histogram(beta, delta: float, n: int) -> np.ndarray:
    """Counts ``m_delta(y, r)``, ``r = 0, 1, ...``, of the entries of ``beta``.

    ``r = 0`` holds ``|beta_j| <= delta/n``; ``r >= 1`` holds
    ``|beta_j| in (delta/n) (2^(r-1), 2^r]``.
    """
    if not 0 < delta <= 1:
        raise PreconditionError("delta must lie in (0, 1]")
    b = np.abs(np.asarray(getattr(beta, "beta", beta), dtype=np.float64).ravel())
    x = b / (delta / n)
    r = np.zeros(b.size, dtype=np.int64)
    big = x > 1.0
    m, e = np.frexp(x[big])
    r[big] = np.where(m == 0.5, e - 1, e)
    return np.bincount(r, minlength=1)


@dataclass
class SpansProbeReport:
    k: int
    floor: float
    threshold: float
    means: list
    min_norms: list
    excluded: int

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "floor": self.floor,
            "threshold": self.threshold,
            "families": [
                {"mean": m, "min_norm": mn, "above_threshold": m >= self.threshold}
                for m, mn in zip(self.means, self.min_norms)
            ],
            "excluded": self.excluded,
        }


def spansofcomp_probe(
    E: Ensemble, k: int, C_floor: float, trials: int, seed: int = 0, retry_cap: int = 50
) -> SpansProbeReport:
    """Sign averages of polytope norms for families above the norm floor.

    Each of ``trials`` families is drawn as ``k`` uniform unit vectors and
    redrawn up to ``retry_cap`` times until every ``||y_i||_P >=
    C_floor k^(-1/9)``; families that never qualify are excluded.
    """
    if not 1 <= k <= LP_EXACT_CAP:
        raise ModeError(f"need 1 <= k <= {LP_EXACT_CAP}")
    oracle = PolytopeNorm(E)
    rng = np.random.default_rng(seed)
    floor = C_floor * k ** (-1.0 / 9.0)
    means, mins, excluded = [], [], 0
    best_seen = 0.0
    for _ in range(trials):
        for _ in range(retry_cap):
            Y = rng.standard_normal((k, E.n))
            Y /= np.linalg.norm(Y, axis=1, keepdims=True)
            norms = oracle.norms(Y)
            best_seen = max(best_seen, float(norms.min()))
            if norms.min() >= floor:
                means.append(avg_sign_norm(oracle, Y, "exact")[0])
                mins.append(float(norms.min()))
                break
        else:
            excluded += 1
    if trials and not means:
        raise SamplingFailure(
            f"no family reached the floor {floor:.4g} (best minimum norm {best_seen:.4g})",
            achieved=best_seen,
        )
    return SpansProbeReport(k, floor, k ** 0.125, means, mins, excluded)


def lq_direct_sum_norm(component_norms, q: float) -> float:
    v = np.asarray(component_norms, dtype=np.float64).ravel()
    if q < 1:
        raise PreconditionError("q must be at least 1")
    if np.any(v < 0):
        raise PreconditionError("component norms must be non-negative")
    if v.size == 0:
        return 0.0
    top = v.max()
    if top == 0.0:
        return 0.0
    return float(top * np.sum((v / top) ** q) ** (1.0 / q))
