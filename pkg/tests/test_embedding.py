import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import identity_ensemble
from gausspoly.cotype import EuclideanNorm, PolytopeNorm, SupNorm, m_delta_histogram
from gausspoly.embedding import (
    Parallelepiped,
    cleaning_preprocess,
    distortion_lower_bound,
    extract_regular_tuple,
    fitted_exponent,
    probe_summary_csv,
    pseudo_incompressibility_scan,
    spiky_distortion_witness,
    spiky_histogram_family,
    theoremB_probe,
    truncate_coefficients,
)
from gausspoly.ensemble import EnsembleConfig, sample_ensemble
from gausspoly.errors import DegeneracyError, HypothesisFailure, PreconditionError
from gausspoly.l1norm import coefficient_vector, minkowski_norm


def test_regular_tuple_on_cube():
    P = Parallelepiped(np.eye(4), np.ones(4))
    rt = extract_regular_tuple(SupNorm(), P, rho=1.0)
    assert rt.radius == 1.0 and rt.j0 == 0 and rt.delta == 0.5
    # x_alpha = e_alpha at the bisection endpoint
    assert np.allclose(rt.vectors, np.eye(4)[: len(rt.vectors)])
    assert np.all((rt.norms >= rt.delta) & (rt.norms <= 2 * rt.delta))


def test_regular_tuple_size_rule():
    k = 12
    P = Parallelepiped(np.eye(k), np.full(k, 2.0))
    for c in (0.5, 1.0, 2.0):
        rt = extract_regular_tuple(SupNorm(), P, rho=1.0, c=c)
        assert len(rt.vectors) == max(1, min(k // 2, math.floor(c * k / math.log(k))))


def test_regular_tuple_rejects_dependent():
    with pytest.raises(DegeneracyError):
        Parallelepiped(np.array([[1.0, 0.0], [1.0, 0.0]]), [1.0, 1.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 9))
def test_regular_tuple_invariants(seed, k):
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((k, k + 1))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    P = Parallelepiped(U, rng.uniform(0.2, 3.0, size=k))
    E = sample_ensemble(EnsembleConfig(k + 1, 2 * k + 2, seed % 997))
    rt = extract_regular_tuple(PolytopeNorm(E), P, rho=2.0)
    assert np.all(np.abs(np.linalg.norm(rt.vectors, axis=1) - 1) <= 1e-9)
    lo, hi = 2.0 ** (rt.j0 - 1) / rt.radius, 2.0**rt.j0 / rt.radius
    assert np.all((rt.norms > lo * (1 - 1e-12)) & (rt.norms <= hi * (1 + 1e-12)))


def test_distortion_examples():
    assert distortion_lower_bound(SupNorm(), [[0.0, 2.0]]).bound == 1.0
    for k in (2, 5, 9):
        c = distortion_lower_bound(EuclideanNorm(), np.eye(k), sigma_budget=2**k)
        assert math.isclose(c.bound, math.sqrt(k), rel_tol=1e-12) and c.exhaustive
    c = distortion_lower_bound(PolytopeNorm(identity_ensemble(2)), np.eye(2))
    assert math.isclose(c.bound, 2.0)
    with pytest.raises(DegeneracyError):
        distortion_lower_bound(SupNorm(), [[1.0, 0.0], [0.0, 0.0]])


def test_distortion_witnesses_and_soundness():
    E = sample_ensemble(EnsembleConfig(8, 16, 1))
    o = PolytopeNorm(E)
    Y = np.random.default_rng(1).standard_normal((6, 8))
    c = distortion_lower_bound(o, Y)
    assert abs(o(c.sigma @ Y) - c.L_lower) <= 1e-9
    assert abs(o(Y[c.index]) - c.ell_upper) <= 1e-9
    # shadow check: the true constants over the full cube / sphere sample
    full = max(o(np.array(s) @ Y) for s in itertools.product([-1, 1], repeat=6))
    V = np.random.default_rng(2).uniform(-1, 1, size=(500, 6))
    V /= np.abs(V).max(axis=1, keepdims=True)
    lower = min(o.norms(V @ Y).min(), o.norms(Y).min())
    assert c.bound <= full / lower + 1e-9
    sampled = distortion_lower_bound(o, Y, sigma_budget=4, seed=3)
    assert not sampled.exhaustive and sampled.bound <= c.bound + 1e-12


def test_cleaning_single_spike():
    # with |L| = 1 the only admissible starting scale is r = 0
    n = 4
    h = np.zeros(10)
    h[0] = 100.0
    res = cleaning_preprocess([h], [0], alpha=0.5, epsilon=0.25, n=n)
    assert res.r == 0 and res.sequences[0] == [0] and res.L_tilde == [0] and res.p == 100
    h = np.zeros(10)
    h[0], h[3] = 5.0, 100.0
    res = cleaning_preprocess([h], [0], alpha=0.5, epsilon=0.25, n=n)
    assert res.sequences[0] == [0, 3] and res.r == 3


def test_cleaning_identical_vectors():
    rng = np.random.default_rng(3)
    h = spiky_histogram_family(16, 16, 0.5, rng)[0]
    res = cleaning_preprocess([h] * 16, range(16), 0.5, 0.25, 16)
    assert res.L_tilde == list(range(16))


def test_cleaning_hypothesis_failure():
    good = spiky_histogram_family(3, 8, 0.5, np.random.default_rng(4))
    bad = np.zeros(10)
    with pytest.raises(HypothesisFailure) as info:
        cleaning_preprocess(good + [bad], range(4), 0.5, 0.25, 8)
    assert info.value.index == 3


def _check_cleaning(hists, res, alpha, eps, n):
    size = len(hists)
    for i in res.L_tilde:
        h = np.asarray(hists[i])
        val = lambda r: h[r] if 0 <= r < h.size else 0.0  # noqa: E731
        m = val(res.r)
        assert res.p <= m <= 2 * res.p
        for hh in range(h.size):
            if hh < res.r:
                assert val(hh) < 2.0 ** ((-2 + eps) * (hh - res.r)) * m
            if hh > res.r:
                assert val(hh) < 2.0 ** (-(hh - res.r) / 2) * m
    top = math.log2(math.sqrt(size))
    assert res.p >= size ** (alpha - eps) * 2.0 ** (-2 * res.r) * 2 ** max(0, res.r - top) * n


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 64), st.floats(0.1, 1.0), st.floats(0.05, 0.5))
def test_cleaning_postconditions(seed, size, alpha, eps):
    n = 20
    hists = spiky_histogram_family(size, n, alpha, np.random.default_rng(seed))
    res = cleaning_preprocess(hists, range(size), alpha, eps, n)
    _check_cleaning(hists, res, alpha, eps, n)
    for seq in res.sequences.values():
        assert len(seq) == len(set(seq))


def test_truncate_examples():
    E = sample_ensemble(EnsembleConfig(6, 12, 5))
    y = np.random.default_rng(5).standard_normal(6)
    beta = coefficient_vector(E, y).beta
    yt, dropped = truncate_coefficients(E, y, np.abs(beta).max())
    assert np.allclose(yt, y, atol=1e-9) and dropped == 0
    yt, dropped = truncate_coefficients(E, y, 1e-300)
    assert np.allclose(yt, 0) and math.isclose(dropped, np.abs(beta).sum())
    with pytest.raises(PreconditionError):
        truncate_coefficients(E, y, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 1.0))
def test_truncate_bound(seed, frac):
    E = sample_ensemble(EnsembleConfig(6, 12, 5))
    y = np.random.default_rng(seed).standard_normal(6)
    beta = coefficient_vector(E, y).beta
    yt, dropped = truncate_coefficients(E, y, frac * np.abs(beta).max())
    assert minkowski_norm(E, y - yt).value <= dropped + 1e-9


def test_pseudo_incompressibility_examples():
    E = sample_ensemble(EnsembleConfig(20, 40, 6))
    y = E.A[:, 3] + 0.3 * E.A[:, 5] + 0.05 * np.random.default_rng(6).standard_normal(20)
    beta = coefficient_vector(E, y).beta
    J = [int(np.argmax(np.abs(beta)))]
    c = 2.0
    rep = pseudo_incompressibility_scan(E, [y], J, c=c)
    assert rep.applicable
    a = np.abs(beta)
    sJ = a[J].sum()
    loop = sum(1 for j in range(40) if j not in J and a[j] >= c / math.sqrt(len(J) * 20) * sJ)
    assert rep.count == loop
    rep = pseudo_incompressibility_scan(E, [np.zeros(20)], [0])
    assert not rep.applicable and rep.verdict is None and not np.any(rep.aggregates)
    with pytest.raises(PreconditionError):
        pseudo_incompressibility_scan(E, [y], range(40))


def test_spiky_witness_examples():
    E = sample_ensemble(EnsembleConfig(10, 20, 7))
    y = np.random.default_rng(7).standard_normal(10)
    y /= np.linalg.norm(y)
    d = minkowski_norm(E, y).value
    w = spiky_distortion_witness(E, [y], d / 2, 0.5)
    assert abs(abs(w.v[0]) - 1) == 0 and math.isclose(w.value, d, rel_tol=1e-12)
    w = spiky_distortion_witness(E, [y, -y], d / 2, 0.5)
    assert w.v[0] == -w.v[1] and math.isclose(w.value, 2 * d, rel_tol=1e-9)
    with pytest.raises(HypothesisFailure):
        spiky_distortion_witness(E, [y], 0.1, 0.5)


def test_spiky_witness_beats_random_search():
    E = sample_ensemble(EnsembleConfig(40, 80, 8))
    rng = np.random.default_rng(8)
    Y = rng.standard_normal((6, 40))
    Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    norms = PolytopeNorm(E).norms(Y)
    delta = norms.max() / 2
    w = spiky_distortion_witness(E, Y, delta, 0.5)
    V = rng.uniform(-1, 1, size=(10**4, 6))
    V /= np.abs(V).max(axis=1, keepdims=True)
    # the norm is convex, so over the cube it is maximized at a vertex
    assert w.value >= PolytopeNorm(E).norms(V[:300] @ Y).max() - 1e-9
    assert len(w.spike_hypothesis) == 6


def test_probe_examples():
    E = sample_ensemble(EnsembleConfig(8, 16, 9))
    assert theoremB_probe(E, 1, budget=2).best_bound == 1.0
    for k in (4, 9, 16):
        rep = theoremB_probe(None, k, strategies=("orthonormal",), budget=3, oracle=EuclideanNorm(), dim=k + 4)
        assert abs(rep.best_bound / math.sqrt(k) - 1) <= 0.1


def test_probe_budget_monotone():
    E = sample_ensemble(EnsembleConfig(8, 16, 10))
    prev = math.inf
    for budget in (1, 2, 3):
        rep = theoremB_probe(E, 3, budget=budget, seed=4)
        assert rep.best_bound <= prev
        prev = rep.best_bound
        assert len(rep.records) == 5 * budget
    assert rep.to_jsonl().count("\n") == len(rep.records) - 1
    csv = probe_summary_csv([rep])
    assert csv.splitlines()[0] == "k,best_bound,best_strategy"


def test_fitted_exponent():
    ks = [2, 4, 8, 16]
    assert math.isclose(fitted_exponent(ks, [3 * k**0.4 for k in ks]), 0.4)
