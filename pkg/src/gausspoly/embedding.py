"""Constructive pieces of the l_inf embedding argument.

* :func:`extract_regular_tuple` turns a parallelepiped sandwich of a unit
  ball into unit vectors of comparable norm that behave like an l_inf basis.
* :func:`distortion_lower_bound` certifies ``||T|| ||T^-1|| >= L / ell`` for
  the map ``e_i -> y_i`` from l_inf^k.
* :func:`cleaning_preprocess` and :func:`truncate_coefficients` implement the
  histogram cleaning and coefficient truncation steps.
* :func:`spiky_distortion_witness` and :func:`theoremB_probe` are witness
  searches: they report what they find and never claim a universal statement.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cotype import (
    LP_EXACT_CAP,
    NormOracle,
    PolytopeNorm,
    dyadic_exponent,
    gray_signs,
    m_delta_histogram,
    sign_sum_norms,
)
from .ensemble import Ensemble
from .errors import (
    ContractViolation,
    DegeneracyError,
    HypothesisFailure,
    PreconditionError,
)
from .l1norm import coefficient_vector, minkowski_norm, norm_values
from .numerics import rank

DEFAULT_TUPLE_C = 1.0
DEFAULT_TUPLE_CAPITAL_C = 1.0
DEFAULT_PSEUDO_C = 0.1
DEFAULT_SIGMA_BUDGET = 256
DEFAULT_STRATEGIES = ("random", "orthonormal", "vertices", "stairs", "refine")
_BISECT_TOL = 1e-10


@dataclass(frozen=True)
class Parallelepiped:
    """``{sum a_i u_i : |a_i| <= r_i}`` with unit, independent ``u_i``."""

    u: np.ndarray = field(repr=False)
    r: np.ndarray

    def __post_init__(self):
        U = np.atleast_2d(np.asarray(self.u, dtype=np.float64))
        r = np.asarray(self.r, dtype=np.float64).ravel()
        if U.shape[0] != r.size:
            raise PreconditionError("need one half-width per direction")
        if np.any(r <= 0):
            raise PreconditionError("half-widths must be positive")
        if np.abs(np.linalg.norm(U, axis=1) - 1.0).max() > 1e-9:
            raise PreconditionError("directions must be unit vectors")
        if rank(U) < U.shape[0]:
            raise DegeneracyError("directions are linearly dependent")
        object.__setattr__(self, "u", U)
        object.__setattr__(self, "r", r)

    @property
    def k(self) -> int:
        return self.r.size


@dataclass(frozen=True)
class RegularTuple:
    vectors: np.ndarray = field(repr=False)
    delta: float
    distortion_factor: float
    j0: int = 0
    radius: float = math.nan
    norms: np.ndarray | None = field(default=None, repr=False)


def _path_gap(ua, ub, ra, rb, r, theta):
    v = (1.0 - theta) * ua + theta * ub
    nv = np.linalg.norm(v)
    a, b = (1.0 - theta) / nv, theta / nv
    fa = ra / abs(a) if a != 0 else math.inf
    fb = rb / abs(b) if b != 0 else math.inf
    return min(fa, fb) - r, v / nv


def extract_regular_tuple(
    norm: NormOracle,
    P: Parallelepiped,
    rho: float,
    c: float = DEFAULT_TUPLE_C,
    C: float = DEFAULT_TUPLE_CAPITAL_C,
) -> RegularTuple:
    """Regular tuple from a parallelepiped ``P`` with ``(1/rho) P ⊂ K ⊂ P``.

    Directions are sorted by half-width, ``d = floor(k/2)`` and ``r`` is the
    midpoint of ``r_d`` and ``r_{d+1}``.  For each ``alpha <= d`` a unit
    ``x_alpha`` on the normalized segment from ``u_alpha`` to ``u_{d+alpha}``
    with ``min(r_alpha/|a|, r_{d+alpha}/|b|) = r`` is found by bisection.
    The ``x_alpha`` are bucketed by ``||x|| in (2^(j-1)/r, 2^j/r]`` and the
    first ``max(1, min(|bucket|, floor(c k / log k)))`` members of the
    largest bucket are returned with ``delta = 2^(j0-1)/r``.
    """
    k = P.k
    if k < 2:
        raise PreconditionError("need k >= 2 directions")
    order = np.argsort(P.r, kind="stable")
    U, R = P.u[order], P.r[order]
    d = k // 2
    r = 0.5 * (R[d - 1] + R[d])
    xs = []
    for alpha in range(d):
        ua, ub, ra, rb = U[alpha], U[d + alpha], R[alpha], R[d + alpha]
        if 1.0 - abs(float(ua @ ub)) <= 1e-12:
            raise DegeneracyError(f"path {alpha} is degenerate: u_a and u_b are parallel")
        g0, x0 = _path_gap(ua, ub, ra, rb, r, 0.0)
        if g0 >= 0:
            xs.append(x0)
            continue
        lo, hi = 0.0, 1.0
        while hi - lo > _BISECT_TOL:
            mid = 0.5 * (lo + hi)
            if _path_gap(ua, ub, ra, rb, r, mid)[0] >= 0:
                hi = mid
            else:
                lo = mid
        xs.append(_path_gap(ua, ub, ra, rb, r, hi)[1])
    X = np.array(xs)
    norms = norm.norms(X)
    if np.any(norms <= 0):
        raise DegeneracyError("a path vector has zero norm")
    buckets: dict[int, list[int]] = {}
    for i, v in enumerate(norms):
        buckets.setdefault(dyadic_exponent(float(v * r)) + 1, []).append(i)
    if not buckets:
        raise ContractViolation("pigeonhole produced no bucket")
    j0 = min(buckets, key=lambda j: (-len(buckets[j]), j))
    members = buckets[j0]
    size = max(1, min(len(members), math.floor(c * k / math.log(k))))
    chosen = members[:size]
    return RegularTuple(X[chosen], 2.0 ** (j0 - 1) / r, C * rho, j0, r, norms[chosen])


@dataclass(frozen=True)
class DistortionCertificate:
    """``bound = L_lower / ell_upper <= ||T|| ||T^-1||`` for ``T e_i = y_i``."""

    L_lower: float
    ell_upper: float
    bound: float
    sigma: np.ndarray = field(repr=False)
    index: int
    exhaustive: bool

    def as_dict(self) -> dict:
        return {
            "L_lower": self.L_lower,
            "ell_upper": self.ell_upper,
            "bound": self.bound,
            "sigma": [int(s) for s in self.sigma],
            "index": self.index,
            "exhaustive": self.exhaustive,
        }


def distortion_lower_bound(
    norm: NormOracle, Y, sigma_budget: int = DEFAULT_SIGMA_BUDGET, seed: int = 0
) -> DistortionCertificate:
    """Certified lower bound on the distortion of ``e_i -> y_i``.

    ``||T||`` is the largest ``||sum sigma_i y_i||`` over sign vertices; all
    ``2^(k-1)`` (up to global sign) are visited when that fits in
    ``sigma_budget`` and ``k <= 16``, otherwise ``sigma_budget`` random ones,
    which still gives a lower bound.  ``||T^-1|| >= 1 / min_i ||y_i||``.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    k = Y.shape[0]
    if k < 1:
        raise PreconditionError("need k >= 1")
    single = norm.norms(Y)
    if np.any(single <= 0):
        i = int(np.flatnonzero(single <= 0)[0])
        raise DegeneracyError(f"y_{i} has zero norm; the map is not injective")
    exhaustive = k <= LP_EXACT_CAP and 2 ** (k - 1) <= sigma_budget
    if exhaustive:
        S = gray_signs(k)
    else:
        rng = np.random.default_rng(seed)
        S = rng.choice([-1.0, 1.0], size=(int(sigma_budget), k))
        S *= S[:, :1]
    vals = norm.norms(S @ Y)
    top = int(np.argmax(vals))
    idx = int(np.argmin(single))
    L, ell = float(vals[top]), float(single[idx])
    return DistortionCertificate(L, ell, L / ell, S[top].astype(np.int64), idx, exhaustive)


@dataclass
class CleaningResult:
    L_tilde: list
    r: int
    p: float
    sequences: dict = field(repr=False)
    r_tilde: dict = field(repr=False)


def _hist_value(h: np.ndarray, r: int) -> float:
    return float(h[r]) if 0 <= r < h.size else 0.0


def cleaning_preprocess(
    histograms, L, alpha: float, epsilon: float, n: int, max_iter: int = 10000
) -> CleaningResult:
    """Select a large subfamily whose histograms peak at a common scale.

    ``histograms[i]`` holds ``m_delta(y_i, r)`` for ``r = 0, 1, ...`` (missing
    entries are 0).  Per ``i``: start at the lowest ``r <= log2 sqrt|L|`` with
    ``m(r) > |L|^alpha 2^(-2r) n``; then repeatedly move to the first ``r``
    (scanning upward) with either ``r < cur`` and ``m(r) 2^((2-eps) r) >=
    m(cur) 2^((2-eps) cur)``, or ``r > cur`` and ``m(r) 2^(r/2) >=
    m(cur) 2^(cur/2)``.  Final values are grouped by ``(r~, floor(log2 m))``;
    the largest group wins (ties: lowest ``r``, then lowest ``m`` class) and
    ``p`` is the least ``m`` in it.
    """
    keys = list(L)
    if not keys:
        raise PreconditionError("L must be nonempty")
    if not 0 < alpha <= 1 or not 0 < epsilon <= 0.5:
        raise PreconditionError("need alpha in (0, 1] and epsilon in (0, 1/2]")
    size = len(keys)
    top = math.log2(math.sqrt(size))
    hists = {i: np.asarray(histograms[i], dtype=np.float64).ravel() for i in keys}
    sequences, r_tilde = {}, {}
    for i in keys:
        h = hists[i]
        start = None
        r = 0
        while r <= top + 1e-12:
            if _hist_value(h, r) > size**alpha * 2.0 ** (-2 * r) * n:
                start = r
                break
            r += 1
        if start is None:
            raise HypothesisFailure(f"vector {i} has no qualifying starting scale", index=i)
        seq = [start]
        cur = start
        for _ in range(max_iter):
            low = _hist_value(h, cur) * 2.0 ** ((2 - epsilon) * cur)
            high = _hist_value(h, cur) * 2.0 ** (cur / 2)
            nxt = None
            for r in range(h.size):
                if r < cur and _hist_value(h, r) * 2.0 ** ((2 - epsilon) * r) >= low:
                    nxt = r
                    break
                if r > cur and _hist_value(h, r) * 2.0 ** (r / 2) >= high:
                    nxt = r
                    break
            if nxt is None:
                break
            cur = nxt
            seq.append(cur)
        else:
            raise ContractViolation(f"cleaning did not terminate for vector {i}")
        sequences[i] = seq
        r_tilde[i] = cur
    classes: dict[tuple[int, int], list] = {}
    for i in keys:
        m = _hist_value(hists[i], r_tilde[i])
        classes.setdefault((r_tilde[i], math.frexp(m)[1]), []).append(i)
    (r_best, _), members = min(classes.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    p = min(_hist_value(hists[i], r_best) for i in members)
    floor_p = size ** (alpha - epsilon) * 2.0 ** (-2 * r_best) * 2.0 ** max(0.0, r_best - top) * n
    if not p >= floor_p:
        raise ContractViolation(f"p = {p} below the guaranteed level {floor_p:.6g}")
    for i in members:
        h = hists[i]
        m = _hist_value(h, r_best)
        if not p <= m <= 2 * p:
            raise ContractViolation(f"vector {i}: m = {m} outside [p, 2p]")
        for hh in range(max(h.size, r_best + 1)):
            v = _hist_value(h, hh)
            if hh < r_best and not v < 2.0 ** ((-2 + epsilon) * (hh - r_best)) * m:
                raise ContractViolation(f"vector {i}: lower decay fails at h = {hh}")
            if hh > r_best and not v < 2.0 ** (-(hh - r_best) / 2) * m:
                raise ContractViolation(f"vector {i}: upper decay fails at h = {hh}")
    return CleaningResult(members, r_best, p, sequences, r_tilde)


def spiky_histogram_family(size: int, n: int, alpha: float, rng: np.random.Generator, length: int = 24):
    """Random histograms that satisfy the cleaning hypothesis.

    Each has a spike above ``|L|^alpha 2^(-2r) n`` at some
    ``r <= log2 sqrt|L|`` over a random background.
    """
    top = int(math.floor(math.log2(math.sqrt(size)) + 1e-12))
    out = []
    for _ in range(size):
        h = np.floor(rng.exponential(scale=float(n), size=length) * 2.0 ** (-rng.uniform(0, 2) * np.arange(length)))
        r0 = int(rng.integers(0, top + 1))
        need = size**alpha * 2.0 ** (-2 * r0) * n
        h[r0] = math.floor(need * rng.uniform(1.0, 4.0)) + 1
        out.append(h)
    return out


def truncate_coefficients(E: Ensemble, y, threshold: float) -> tuple[np.ndarray, float]:
    """``y' = sum_{|beta_j| <= threshold} beta_j X_j`` and the dropped l1 mass."""
    if not threshold > 0:
        raise PreconditionError("threshold must be positive")
    beta = coefficient_vector(E, y).beta
    keep = np.abs(beta) <= threshold
    y_trunc = E.A @ np.where(keep, beta, 0.0)
    return y_trunc, float(np.abs(beta[~keep]).sum())


@dataclass
class PseudoIncompressibilityReport:
    applicable: bool
    aggregates: np.ndarray = field(repr=False)
    mean_l1: float
    lhs: float
    count: int | None
    threshold: float
    c: float

    @property
    def verdict(self) -> bool | None:
        return None if not self.applicable else self.count >= self.threshold


def pseudo_incompressibility_scan(
    E: Ensemble, Y, J, trials: int = 10000, c: float = DEFAULT_PSEUDO_C, seed: int = 0
) -> PseudoIncompressibilityReport:
    """Column aggregates ``a_h = sqrt(sum_i beta_h(y_i)^2)`` against a set ``J``.

    When ``c sum_{h in J} a_h >= E_sigma ||beta^sigma||_1`` (exact for
    ``|L| <= 16``, Monte Carlo otherwise) the indices ``j`` outside ``J`` with
    ``a_j >= c / sqrt(|J| n) sum_{h in J} a_h`` are counted and compared with
    ``c n``; otherwise the report is marked not applicable.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    J = np.asarray(sorted(set(int(j) for j in J)), dtype=np.int64)
    if J.size == 0:
        raise PreconditionError("J must be nonempty")
    if J.size > c * E.n + 1e-12:
        raise PreconditionError(f"|J| = {J.size} exceeds c n = {c * E.n:g}")
    _, betas = norm_values(E, Y, return_betas=True)
    a = np.sqrt(np.sum(betas**2, axis=0))
    mode = "exact" if Y.shape[0] <= LP_EXACT_CAP else "mc"
    mean_l1 = float(sign_sum_norms(PolytopeNorm(E), Y, mode, trials, seed).mean())
    sJ = float(a[J].sum())
    lhs = c * sJ
    threshold = c * E.n
    if not (lhs >= mean_l1 and sJ > 0):
        return PseudoIncompressibilityReport(False, a, mean_l1, lhs, None, threshold, c)
    outside = np.ones(E.N, dtype=bool)
    outside[J] = False
    count = int(np.sum(a[outside] >= c / math.sqrt(J.size * E.n) * sJ))
    return PseudoIncompressibilityReport(True, a, mean_l1, lhs, count, threshold, c)


@dataclass
class SpikyWitness:
    v: np.ndarray
    value: float
    benchmark: float
    reached: bool
    spike_hypothesis: list
    evaluations: int


def spiky_distortion_witness(
    E: Ensemble,
    Y,
    delta: float,
    alpha: float,
    search_budget: int = 1024,
    seed: int = 0,
) -> SpikyWitness:
    """Search ``||v||_inf = 1`` maximizing ``||sum v_i y_i||_P``.

    Sign vertices are enumerated (``|L| <= 16`` and ``2^(|L|-1) <=
    search_budget``) or sampled, then single-coordinate sign flips are
    applied greedily from the best vertex.  The value is compared with
    ``delta |L|^(alpha/5)``; missing it is reported, not raised.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    size = Y.shape[0]
    if np.abs(np.linalg.norm(Y, axis=1) - 1.0).max() > 1e-9:
        raise PreconditionError("vectors must be unit length")
    _, betas = norm_values(E, Y, return_betas=True)
    pn = np.abs(betas).sum(axis=1)
    for i, v in enumerate(pn):
        if not delta - 1e-9 <= v <= 2 * delta + 1e-9:
            raise HypothesisFailure(f"||y_{i}||_P = {v:.6g} outside [{delta}, {2 * delta}]", index=i)
    top = math.log2(math.sqrt(size))
    spikes = []
    for b in betas:
        h = m_delta_histogram(b, delta, E.n)
        spikes.append(
            any(_hist_value(h, r) / (2.0 ** (-2 * r) * E.n) > size**alpha for r in range(int(top + 1e-12) + 1))
        )
    oracle = PolytopeNorm(E)
    if size <= LP_EXACT_CAP and 2 ** (size - 1) <= search_budget:
        S = gray_signs(size)
    else:
        rng = np.random.default_rng(seed)
        S = rng.choice([-1.0, 1.0], size=(int(search_budget), size))
    vals = oracle.norms(S @ Y)
    evals = vals.size
    best = int(np.argmax(vals))
    v, value = S[best].copy(), float(vals[best])
    improved = True
    while improved:
        improved = False
        for i in range(size):
            w = v.copy()
            w[i] = -w[i]
            val = float(minkowski_norm(E, w @ Y).value)
            evals += 1
            if val > value * (1 + 1e-12):
                v, value, improved = w, val, True
    bench = delta * size ** (alpha / 5)
    return SpikyWitness(v, value, bench, value >= bench, spikes, evals)


@dataclass
class ProbeReport:
    k: int
    best_bound: float
    best_strategy: str
    records: list = field(repr=False)

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(r, sort_keys=True) for r in self.records)


def _unit_rows(X: np.ndarray) -> np.ndarray:
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def _candidate(strategy: str, E, k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    if strategy == "random":
        return _unit_rows(rng.standard_normal((k, n)))
    if strategy == "orthonormal":
        Q, _ = np.linalg.qr(rng.standard_normal((n, k)))
        return Q.T.copy()
    if E is None:
        raise PreconditionError(f"strategy {strategy!r} needs the generator matrix")
    if strategy == "vertices":
        return _unit_rows(E.At[rng.choice(E.N, size=k, replace=False)].copy())
    if strategy == "stairs":
        rows = []
        for y in _unit_rows(rng.standard_normal((k, n))):
            beta = coefficient_vector(E, y).beta
            nz = np.abs(beta[beta != 0])
            yt, _ = truncate_coefficients(E, y, float(np.median(nz)))
            rows.append(yt if np.linalg.norm(yt) > 0 else y)
        return _unit_rows(np.array(rows))
    raise PreconditionError(f"unknown strategy {strategy!r}")


def _refine(oracle, Y, rng, sigma_budget, seed, steps):
    # coordinate descent: replace one vector at a time by a random unit
    # direction, keep the change when the certificate drops
    cert = distortion_lower_bound(oracle, Y, sigma_budget, seed)
    for s in range(steps):
        i = s % Y.shape[0]
        Z = Y.copy()
        Z[i] = _unit_rows(rng.standard_normal((1, Y.shape[1])))[0]
        c2 = distortion_lower_bound(oracle, Z, sigma_budget, seed)
        if c2.bound < cert.bound:
            Y, cert = Z, c2
    return Y, cert


def theoremB_probe(
    E: Ensemble | None,
    k: int,
    strategies=DEFAULT_STRATEGIES,
    budget: int = 4,
    seed: int = 0,
    oracle: NormOracle | None = None,
    sigma_budget: int = DEFAULT_SIGMA_BUDGET,
    refine_steps: int | None = None,
    dim: int | None = None,
) -> ProbeReport:
    """Smallest certified distortion bound over candidate ``k``-tuples.

    Each strategy contributes ``budget`` candidates; candidate ``c`` of a
    strategy depends only on ``(seed, strategy, c)``, so raising ``budget``
    only adds candidates and the reported minimum never increases.
    ``refine`` runs coordinate descent from a fresh orthonormal tuple.
    Without ``E`` pass an ``oracle`` and the ambient dimension ``dim``.
    """
    if not 1 <= k <= LP_EXACT_CAP:
        raise PreconditionError(f"need 1 <= k <= {LP_EXACT_CAP}")
    if oracle is None:
        if E is None:
            raise PreconditionError("need a generator matrix or a norm oracle")
        oracle = PolytopeNorm(E)
    n = E.n if E is not None else int(dim or 0)
    if n < k:
        raise PreconditionError("need n >= k")
    steps = 2 * k if refine_steps is None else refine_steps
    records = []
    for sid, strategy in enumerate(strategies):
        for cidx in range(budget):
            rng = np.random.default_rng([seed, sid, cidx])
            if strategy == "refine":
                Y = _candidate("orthonormal", E, k, n, np.random.default_rng([seed, 1000, cidx]))
                Y, cert = _refine(oracle, Y, rng, sigma_budget, seed, steps)
            else:
                Y = _candidate(strategy, E, k, n, rng)
                cert = distortion_lower_bound(oracle, Y, sigma_budget, seed)
            rec = {"k": k, "strategy": strategy, "candidate": cidx}
            rec.update(cert.as_dict())
            records.append(rec)
    if not records:
        raise PreconditionError("no candidates: empty strategy list or zero budget")
    best = min(records, key=lambda r: r["bound"])
    return ProbeReport(k, best["bound"], best["strategy"], records)


def probe_summary_csv(reports) -> str:
    """``k,best_bound,best_strategy`` rows for a list of probe reports."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "best_bound", "best_strategy"])
    for rep in sorted(reports, key=lambda r: r.k):
        w.writerow([rep.k, repr(rep.best_bound), rep.best_strategy])
    return buf.getvalue()


def fitted_exponent(ks, bounds) -> float:
    """Least-squares slope of ``log bound`` against ``log k``."""
    x = np.log(np.asarray(ks, dtype=np.float64))
    y = np.log(np.asarray(bounds, dtype=np.float64))
    x = x - x.mean()
    return float((x @ (y - y.mean())) / (x @ x))
