import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import identity_ensemble
from gausspoly.ensemble import Ensemble, EnsembleConfig, sample_ensemble
from gausspoly.errors import DegeneracyError, EmptyKernelError, PreconditionError
from gausspoly.geometry import (
    approx_residual,
    compressibility_distance,
    event_sparse_singular,
    inradius_lower,
    inradius_upper,
    kernel_incompressibility_scan,
    relative_inradius_bounds,
    support_function,
    t_sigma_set,
)
from gausspoly.l1norm import minkowski_norm


def sphere(n, m, seed):
    X = np.random.default_rng(seed).standard_normal((m, n))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def test_support_function_examples(ens_8_16):
    E2 = identity_ensemble(2)
    assert math.isclose(support_function(E2, [0.6, 0.8]), 0.8)
    assert support_function(E2, [0.0, 0.0]) == 0.0
    y = np.linspace(-1, 1, 8)
    assert support_function(ens_8_16, y) == np.abs(ens_8_16.A.T @ y).max()


def test_support_function_is_dual_of_norm(ens_8_16):
    # <x, y> <= ||x||_P h(y)
    rng = np.random.default_rng(0)
    for _ in range(10):
        x, y = rng.standard_normal((2, 8))
        assert x @ y <= minkowski_norm(ens_8_16, x).value * support_function(ens_8_16, y) + 1e-9


def test_inradius_lower_examples():
    for n in (2, 3, 5):
        assert math.isclose(inradius_lower(identity_ensemble(n)), 1 / math.sqrt(n), rel_tol=1e-12)
    assert abs(inradius_lower(identity_ensemble(2)) - 0.70711) < 1e-5
    with pytest.raises(DegeneracyError):
        inradius_lower(Ensemble.from_matrix([[1.0, 2.0], [2.0, 4.0]]))


def test_inradius_lower_below_sampled_support():
    E = sample_ensemble(EnsembleConfig(3, 6, 4))
    h = np.abs(sphere(3, 10**5, 1) @ E.A).max(axis=1)
    assert inradius_lower(E) <= h.min()


def test_inradius_upper_examples():
    E = identity_ensemble(2)
    assert abs(inradius_upper(E, budget=10**4, descent=False) / (1 / math.sqrt(2)) - 1) < 0.01
    assert inradius_upper(E, directions=[[1.0, 0.0]], descent=False) == 1.0
    assert abs(inradius_upper(E, budget=8) - 1 / math.sqrt(2)) < 1e-9
    with pytest.raises(PreconditionError):
        inradius_upper(E, budget=0)


def test_relative_inradius_bounds():
    E = sample_ensemble(EnsembleConfig(4, 8, 2))
    lo, hi = relative_inradius_bounds(E, [5])
    assert math.isclose(lo, np.linalg.norm(E.A[:, 5]), rel_tol=1e-12)
    assert math.isclose(hi, lo, rel_tol=1e-12)
    n = 3
    lo, hi = relative_inradius_bounds(Ensemble.from_matrix(math.sqrt(n) * np.eye(n)), range(n))
    assert lo <= 1 + 1e-12 <= hi + 2e-12
    lo, hi = relative_inradius_bounds(E, [1, 6])
    # inside the plane of X_1, X_6: sample the unit circle there
    Q = np.linalg.qr(E.A[:, [1, 6]])[0]
    t = np.linspace(0, np.pi, 20001)
    dirs = np.outer(np.cos(t), Q[:, 0]) + np.outer(np.sin(t), Q[:, 1])
    oracle = np.abs(dirs @ E.A[:, [1, 6]]).max(axis=1).min()
    # h is Lipschitz with constant max|X_j| along the circle
    slack = np.linalg.norm(E.A[:, [1, 6]], axis=0).max() * (t[1] - t[0])
    assert lo <= oracle + 1e-12 and oracle - slack <= hi


def test_compressibility_examples():
    assert math.isclose(compressibility_distance([0.5, 0.5, 0.5, 0.5], 0.5), 1 / math.sqrt(2))
    assert compressibility_distance([1.0, 0, 0, 0, 0], 0.01) == 0.0
    b = np.random.default_rng(3).standard_normal(8)
    b /= np.linalg.norm(b)
    oracle = min(
        np.linalg.norm(np.delete(b, list(S))) for S in itertools.combinations(range(8), 3)
    )
    assert abs(compressibility_distance(b, 3 / 8) - oracle) < 1e-12
    # delta N < 1 keeps one entry
    assert compressibility_distance(b, 0.01) == compressibility_distance(b, 1 / 8)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_compressibility_monotone(seed, d1, d2):
    b = np.random.default_rng(seed).standard_normal(12)
    lo, hi = sorted((d1, d2))
    assert compressibility_distance(b, hi) <= compressibility_distance(b, lo) + 1e-15


def test_compressibility_zero_iff_sparse():
    b = np.zeros(10)
    b[[2, 7]] = [1.0, -3.0]
    assert compressibility_distance(b, 0.2) == 0.0
    assert compressibility_distance(b, 0.1) > 0.0


def test_kernel_scan_errors_and_line():
    with pytest.raises(EmptyKernelError):
        kernel_incompressibility_scan(sample_ensemble(EnsembleConfig(4, 4, 0)), 0.2, 0.05, 10)
    E = sample_ensemble(EnsembleConfig(4, 5, 0))
    rep = kernel_incompressibility_scan(E, 0.2, 0.05, 50, adversarial=0, keep_probes=True)
    d = [compressibility_distance(v, 0.2) for v in rep.probe_vectors]
    assert np.ptp(d) < 1e-12


def test_kernel_scan_matches_exhaustive_oracle():
    for seed in range(3):
        E = sample_ensemble(EnsembleConfig(5, 12, seed))
        rep = kernel_incompressibility_scan(E, 0.2, 0.05, 200, seed=seed, adversarial=16, keep_probes=True)
        keep = rep.keep
        for v in rep.probe_vectors:
            v = v / np.linalg.norm(v)
            oracle = min(
                np.linalg.norm(np.delete(v, list(S)))
                for S in itertools.combinations(range(12), keep)
            )
            assert abs(compressibility_distance(v, 0.2) - oracle) < 1e-10
            assert np.linalg.norm(E.A @ v) < 1e-9


def test_event_scaled_identity():
    n = 5
    rep = event_sparse_singular(Ensemble.from_matrix(math.sqrt(n) * np.eye(n)), c=0.01)
    assert rep.holds["spectral_norm"] and rep.holds["smallest_singular"]
    assert rep.margins["sparse_subsets"] is None and rep.holds["sparse_subsets"]
    n = 200
    rep = event_sparse_singular(Ensemble.from_matrix(math.sqrt(n) * np.eye(n)), c=0.01)
    assert rep.all_hold and rep.exhaustive
    assert math.isclose(rep.margins["spectral_norm"], 3 * math.sqrt(n))
    assert rep.margins["sparse_subsets"] > 0
    with pytest.raises(PreconditionError):
        event_sparse_singular(Ensemble.from_matrix(np.eye(2)), c=0.02)


def test_event_holds_iff_margin_nonnegative():
    E = sample_ensemble(EnsembleConfig(100, 120, 1))
    rep = event_sparse_singular(E, subset_budget=50)
    for k, v in rep.margins.items():
        assert rep.holds[k] == (v is None or v >= 0)
    assert not rep.exhaustive and rep.subsets_checked == 50


def test_event_margin_stability():
    E = sample_ensemble(EnsembleConfig(100, 110, 2))
    P = np.random.default_rng(0).standard_normal(E.A.shape)
    F = Ensemble(E.A + 1e-8 * P / np.linalg.norm(P, 2), E.config)
    a = event_sparse_singular(E, subset_budget=200, seed=1).margins
    b = event_sparse_singular(F, subset_budget=200, seed=1).margins
    for k in a:
        assert abs(a[k] - b[k]) <= 1e-6


def test_approx_residual_examples():
    n = 4
    E = Ensemble.from_matrix(math.sqrt(n) * np.eye(n))
    beta = np.eye(n)[0]
    assert approx_residual(E, beta, [0], c=1.0)[0] < 1e-12
    assert approx_residual(E, np.zeros(n), [0], c=1.0)[0] == 0.0
    E = sample_ensemble(EnsembleConfig(50, 100, 3))
    T = [4, 9, 30]
    beta = np.zeros(100)
    beta[T] = [0.5, -1.0, 2.0]
    AT = E.A[:, T]
    direct = np.linalg.norm((AT.T @ AT - 50 * np.eye(3)) @ beta[T])
    assert math.isclose(approx_residual(E, beta, T, c=0.1)[0], direct, rel_tol=1e-12)
    with pytest.raises(PreconditionError):
        approx_residual(E, beta, [], c=0.1)
    with pytest.raises(PreconditionError):
        approx_residual(E, beta, T)  # |T| > c n at the default c


def test_approx_residual_within_bound_mostly():
    ok = 0
    for seed in range(40):
        E = sample_ensemble(EnsembleConfig(50, 100, seed))
        rng = np.random.default_rng(seed)
        T = rng.choice(100, size=int(rng.integers(1, 6)), replace=False)
        beta = np.zeros(100)
        beta[T] = rng.standard_normal(T.size)
        r, b = approx_residual(E, beta, T, c=0.1)
        ok += r <= b
    assert ok >= 0.95 * 40


def test_t_sigma_set_examples():
    assert list(t_sigma_set([0.5, 0.1, 0.5], 0.3)) == [0, 2]
    assert t_sigma_set([0.5, 0.1], 0.6).size == 0
    assert list(t_sigma_set([0.0, 1e-300, -2.0], 1e-320)) == [1, 2]
    with pytest.raises(PreconditionError):
        t_sigma_set([1.0], 0.0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_inradius_sandwich(seed):
    E = sample_ensemble(EnsembleConfig(6, 12, seed))
    assert inradius_lower(E) <= inradius_upper(E, budget=64, seed=seed, descent_starts=2) + 1e-12
