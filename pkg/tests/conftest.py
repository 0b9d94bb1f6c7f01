"""Shared fixtures and brute-force oracles."""
import itertools
import math

import numpy as np
import pytest

from gausspoly.ensemble import Ensemble, EnsembleConfig, sample_ensemble


def bfs_norm(A, y):
    """min ||beta||_1 s.t. A beta = y by enumerating every basic solution.

    Each basic solution uses ``rank`` linearly independent columns; the L1
    optimum of a feasible program is attained at one of them.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    n, N = A.shape
    if not np.any(y):
        return 0.0
    best = math.inf
    for size in range(1, n + 1):
        for cols in itertools.combinations(range(N), size):
            B = A[:, cols]
            if np.linalg.matrix_rank(B) < size:
                continue
            x, *_ = np.linalg.lstsq(B, y, rcond=None)
            if np.linalg.norm(B @ x - y) <= 1e-10 * (1 + np.linalg.norm(y)):
                best = min(best, float(np.abs(x).sum()))
    return best


def linprog_norm(A, y):
    """The same program through scipy's HiGHS solver (test-only dependency)."""
    from scipy.optimize import linprog

    A = np.asarray(A, dtype=float)
    N = A.shape[1]
    res = linprog(
        np.ones(2 * N),
        A_eq=np.hstack([A, -A]),
        b_eq=y,
        bounds=[(0, None)] * (2 * N),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    assert res.status == 0
    return float(res.fun)


@pytest.fixture(scope="session")
def ens_20_40():
    return sample_ensemble(EnsembleConfig(20, 40, 3))


@pytest.fixture(scope="session")
def ens_8_16():
    return sample_ensemble(EnsembleConfig(8, 16, 11))


def identity_ensemble(n):
    return Ensemble.from_matrix(np.eye(n))


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line[1])
