import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gausspoly.ensemble import EnsembleConfig, sample_ensemble
from gausspoly.errors import CoverageFailure, DimensionMismatchError, PreconditionError
from gausspoly.grassmann import (
    GrassmannNet,
    build_net,
    decompose_projection,
    lattice_net,
    projection_tail_counts,
    random_subspace,
    residual_bound,
    subspace_distance,
)
from gausspoly.numerics import Subspace, orthonormal_basis, projector


def proj_dist(E, F):
    return np.linalg.norm(projector(E) - projector(F), 2)


def test_distance_is_projector_spectral_distance():
    rng = np.random.default_rng(0)
    for _ in range(20):
        E, F = random_subspace(6, 2, rng), random_subspace(6, 2, rng)
        assert abs(subspace_distance(E, F) - proj_dist(E, F)) < 1e-12
        assert abs(subspace_distance(E, F) - subspace_distance(F, E)) < 1e-12


def test_greedy_net_on_lines_in_plane():
    net = build_net(2, 1, 0.25, 400, seed=0)
    assert net.coverage_audit <= 0.25
    B = np.stack([S.basis for S in net.entries])
    for i in range(len(net)):
        for j in range(i):
            assert proj_dist(net.entries[i], net.entries[j]) > 0.125
    # lines at angle t: projector distance sin(t)
    for t in np.linspace(0, np.pi, 181):
        F = Subspace(np.array([[math.cos(t)], [math.sin(t)]]))
        assert net.nearest(F)[1] <= 0.25
    assert B.shape[1:] == (2, 1)


def test_nearest_on_own_entry():
    net = build_net(4, 2, 0.25, 300, seed=1, audit_size=0)
    idx, dist = net.nearest(net.entries[3])
    assert idx == 3 and dist < 1e-12


def test_nearest_two_entry_symmetry():
    rng = np.random.default_rng(2)
    E, F = random_subspace(5, 2, rng), random_subspace(5, 2, rng)
    a = GrassmannNet(5, 2, 0.25, [E]).nearest(F)[1]
    b = GrassmannNet(5, 2, 0.25, [F]).nearest(E)[1]
    assert abs(a - b) < 1e-12


def test_parameter_checks():
    with pytest.raises(PreconditionError):
        build_net(4, 2, 0.3, 10)
    with pytest.raises(PreconditionError):
        build_net(4, 3, 0.25, 10)
    with pytest.raises(CoverageFailure) as info:
        build_net(6, 3, 0.1, 3, seed=0, audit_size=20)
    assert info.value.achieved_radius > 0.1
    net = lattice_net(6, 2, 0.25)
    with pytest.raises(DimensionMismatchError):
        net.nearest(random_subspace(6, 1, np.random.default_rng(0)))


def test_lattice_net_covers():
    rng = np.random.default_rng(3)
    for n, d in [(2, 1), (6, 2), (8, 3)]:
        net = lattice_net(n, d, 0.25)
        for _ in range(200):
            F = random_subspace(n, d, rng)
            idx, dist = net.nearest(F)
            assert dist <= 0.25
            assert abs(dist - proj_dist(net.entries[idx], F)) < 1e-12


def test_net_json_round_trip():
    net = build_net(4, 2, 0.25, 200, seed=4, audit_size=0)
    back = GrassmannNet.from_json(net.to_json())
    assert len(back) == len(net) and back.epsilon == net.epsilon
    F = random_subspace(4, 2, np.random.default_rng(5))
    assert back.nearest(F) == net.nearest(F)
    lat = lattice_net(4, 2, 0.25)
    lat.nearest(F)
    again = GrassmannNet.from_json(lat.to_json())
    assert again.nearest(F)[0] == 0


def test_decompose_member_of_net():
    net = lattice_net(4, 2, 0.25)
    net.nearest(random_subspace(4, 2, np.random.default_rng(6)))
    steps = decompose_projection(net, net.entries[0], 3)
    assert steps[0].index == 0
    assert steps[0].residual < 1e-12
    assert all(s.residual < 1e-12 for s in steps)


def test_residual_bound_value():
    assert abs(residual_bound(0.25, 5) - 0.00260416666) < 1e-10


def test_decompose_random_g62():
    rng = np.random.default_rng(7)
    net = lattice_net(6, 2, 0.25)
    for _ in range(10):
        F = random_subspace(6, 2, rng)
        steps = decompose_projection(net, F, 8)
        PF = projector(F)
        total = np.zeros((6, 6))
        for j, s in enumerate(steps, start=1):
            PE = projector(net.entries[s.index])
            total += s.D @ PE
            measured = np.linalg.norm(PF - total, 2)
            assert abs(measured - s.residual) < 1e-10
            assert measured <= residual_bound(0.25, j) + 1e-8
            assert np.linalg.norm(s.D, 2) <= 2 * 0.25 ** (j - 1) + 1e-9


def test_decomposition_is_deterministic():
    F = random_subspace(6, 2, np.random.default_rng(8))
    a = decompose_projection(lattice_net(6, 2, 0.25), F, 6)
    b = decompose_projection(lattice_net(6, 2, 0.25), F, 6)
    for s, t in zip(a, b):
        assert np.array_equal(s.D, t.D)


def test_projection_tail_examples():
    E = sample_ensemble(EnsembleConfig(10, 20, 0))
    rng = np.random.default_rng(9)
    F = random_subspace(10, 2, rng)
    big = np.linalg.norm(E.A, axis=0).max()
    s = max(10.0, big / 8 + 1)
    count, bound = projection_tail_counts(E, F, s)
    assert count == 0
    assert math.isclose(bound, 2 * 100 * 20 * math.log2(s) / s**2)
    full = orthonormal_basis(np.eye(10))
    count, _ = projection_tail_counts(E, full, 0.1, C=0.1)
    assert count == int(np.sum(np.linalg.norm(E.A, axis=0) > 8 * 0.1 * math.sqrt(10)))
    with pytest.raises(PreconditionError):
        projection_tail_counts(E, F, 5.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 1), (4, 1), (4, 2), (7, 3)]))
def test_decomposition_bounds_property(seed, nd):
    n, d = nd
    F = random_subspace(n, d, np.random.default_rng(seed))
    steps = decompose_projection(lattice_net(n, d, 0.25), F, 5)
    for j, s in enumerate(steps, start=1):
        assert s.norm <= 2 * 0.25 ** (j - 1) + 1e-9
        assert s.residual <= residual_bound(0.25, j) + 1e-8
