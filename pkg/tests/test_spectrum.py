"""Bisection eigenvalue location: iteration law, caching, interval handling."""

import math

import numpy as np
import pytest

from conftest import eigs_of, make_H
from h2slice.compress import construct, matrix_kernel
from h2slice.errors import ConfigError, NotInInterval, OracleTooLarge
from h2slice.geometry import PointCloud
from h2slice.partition import build_tree, flat_structure
from h2slice.spectrum import (
    EigenvalueEstimate,
    InertiaCache,
    default_interval,
    slice_range,
    slice_spectrum,
    verify_shift_accuracy,
)


def _diag_H(values, leaf=32):
    A = np.diag(np.asarray(values, dtype=float))
    cloud = PointCloud(np.arange(len(values), dtype=float).reshape(-1, 1))
    tree = build_tree(cloud, leaf)
    return construct(matrix_kernel(A), tree, flat_structure(tree), 1e-9)


def test_iteration_law_frozen():
    # ceil(log2((b - a) / eps)) evaluations when the cache starts empty:
    # (2048, 1e-5) -> 28, (4, 1e-3) -> 12, (1, 1e-8) -> 27
    cases = [(2048.0, 1e-5, 28), (4.0, 1e-3, 12), (1.0, 1e-8, 27)]
    for width, eps_ev, want in cases:
        assert math.ceil(math.log2(width / eps_ev)) == want
        H = _diag_H(np.linspace(0.05, 0.95, 16))
        a, b = 0.4, 0.4 + width  # interior target: both endpoints stay lazy
        # targets the count of eigenvalues below 0.4 plus one
        k = int(np.sum(np.linspace(0.05, 0.95, 16) <= 0.4)) + 1
        est = slice_spectrum(H, k, (a - width * 0.3, a + width * 0.7), eps_ev)
        assert est.iterations == want, (width, eps_ev)
        assert est.inertia_evals == want, (width, eps_ev)


def test_slice_matches_dense_eigenvalues():
    vals = np.array([-3.0, -1.5, 0.25, 2.0, 2.0, 7.75, 11.0, 30.0])
    H = _diag_H(vals)
    eps_ev = 1e-7
    for k in range(1, 9):
        est = slice_spectrum(H, k, (-10.0, 40.0), eps_ev)
        assert abs(est.value - vals[k - 1]) < eps_ev / 2, k
        assert est.half_width < eps_ev / 2


def test_degenerate_pair_same_estimate():
    vals = np.array([1.0, 5.0, 5.0, 9.0])
    H = _diag_H(vals)
    e2 = slice_spectrum(H, 2, (0.0, 10.0), 1e-6)
    e3 = slice_spectrum(H, 3, (0.0, 10.0), 1e-6)
    assert e2.value == e3.value


def test_kernel_instance_accuracy():
    H = make_H("circle", "hss", 128, 1e-9, leaf=16)
    w = eigs_of("circle", "hss", 128, 1e-9, leaf=16)
    eps_ev = 1e-6
    iv = (float(w[0] - 1.0), float(w[-1] + 1.0))
    for k in (1, 17, 64, 128):
        est = slice_spectrum(H, k, iv, eps_ev)
        assert abs(est.value - w[k - 1]) <= eps_ev / 2 + 1e-8, k


def test_not_in_interval_low_and_high():
    vals = np.linspace(1.0, 16.0, 16)
    H = _diag_H(vals)
    with pytest.raises(NotInInterval):
        slice_spectrum(H, 1, (2.5, 20.0), 1e-6)  # lambda_1 = 1 below interval
    with pytest.raises(NotInInterval):
        slice_spectrum(H, 16, (0.0, 10.0), 1e-6)  # lambda_16 = 16 above interval
    # boundary semantics: interval is (a, b], so an eigenvalue at b is found
    est = slice_spectrum(H, 16, (0.0, 16.0), 1e-6)
    assert abs(est.value - 16.0) < 5e-7


def test_not_in_interval_carries_bounds():
    H = _diag_H(np.linspace(1.0, 16.0, 16))
    with pytest.raises(NotInInterval) as ei:
        slice_spectrum(H, 1, (2.5, 20.0), 1e-6)
    assert ei.value.interval == (2.5, 20.0)


def test_config_validation():
    H = _diag_H(np.linspace(1.0, 8.0, 8))
    with pytest.raises(ConfigError):
        slice_spectrum(H, 0, (0.0, 10.0))
    with pytest.raises(ConfigError):
        slice_spectrum(H, 9, (0.0, 10.0))
    with pytest.raises(ConfigError):
        slice_spectrum(H, 1, (5.0, 5.0))
    with pytest.raises(ConfigError):
        slice_spectrum(H, 1, (7.0, 3.0))
    with pytest.raises(ConfigError):
        slice_spectrum(H, 1, (0.0, 10.0), eps_ev=0.0)


def test_default_interval_contains_spectrum():
    H = make_H("circle", "hss", 96, 1e-8, leaf=16)
    w = eigs_of("circle", "hss", 96, 1e-8, leaf=16)
    a, b = default_interval(H)
    assert a < w[0] and w[-1] <= b
    # extreme indices resolve inside the default interval
    assert abs(slice_spectrum(H, 1, (a, b), 1e-5).value - w[0]) < 5e-6
    assert abs(slice_spectrum(H, 96, (a, b), 1e-5).value - w[-1]) < 5e-6


def test_default_interval_oracle_cap():
    H = make_H("circle", "hss", 96, 1e-8, leaf=16)
    with pytest.raises(OracleTooLarge):
        default_interval(H, cap=64)


def test_cache_le_ge_branch_resolution():
    cache = InertiaCache()
    cache.insert(5.0, 10)
    cache.insert(2.0, 3)
    # le/ge return the count at the nearest cached shift on that side
    assert cache.le(1.5) is None
    assert cache.le(3.0) == 3
    assert cache.le(2.0) == 3  # inclusive
    assert cache.ge(3.0) == 10
    assert cache.ge(5.0) == 10  # inclusive
    assert cache.ge(6.0) is None
    assert cache.exact(5.0) == 10
    assert cache.exact(3.3) is None
    assert len(cache) == 2
    cache.insert(5.0, 99)  # duplicate shift ignored
    assert cache.exact(5.0) == 10


def test_cache_reuse_reduces_evaluations():
    H = make_H("circle", "hss", 128, 1e-8, leaf=16)
    iv = default_interval(H)
    eps_ev = 1e-5
    solo = 0
    for k in range(40, 56):
        solo += slice_spectrum(H, k, iv, eps_ev).inertia_evals
    cache = InertiaCache()
    ests = slice_range(H, 40, 55, iv, eps_ev, cache=cache)
    shared = cache.fresh_evals
    assert shared < solo
    assert cache.hits > 0
    # same interval, same grid: values must agree exactly with solo runs
    for k, est in zip(range(40, 56), ests):
        assert est.value == slice_spectrum(H, k, iv, eps_ev).value


def test_slice_range_order_and_indices():
    H = make_H("circle", "hss", 96, 1e-8, leaf=16)
    ests = slice_range(H, 10, 20, default_interval(H), 1e-5)
    assert [e.k for e in ests] == list(range(10, 21))
    vals = [e.value for e in ests]
    assert vals == sorted(vals)


def test_estimate_json_roundtrip():
    est = EigenvalueEstimate(k=7, value=1.25, half_width=5e-6, iterations=21,
                             inertia_evals=17, wall_time=0.125)
    back = EigenvalueEstimate.from_json(est.to_json())
    assert back == est


def test_verify_shift_accuracy_far_from_spectrum():
    H = make_H("circle", "hss", 96, 1e-8, leaf=16)
    w = eigs_of("circle", "hss", 96, 1e-8, leaf=16)
    gap_mu = float((w[40] + w[41]) / 2)  # interior, midway between eigenvalues
    rep = verify_shift_accuracy(H, gap_mu)
    assert rep.mu == gap_mu
    assert rep.residual_norm >= 0.0
    assert rep.min_eig_gap > 0
    assert rep.satisfied


def test_tight_tolerance_stays_under_iteration_cap():
    H = _diag_H(np.linspace(1.0, 8.0, 8))
    est = slice_spectrum(H, 4, (0.0, 8.0), 1e-12)
    assert est.iterations == math.ceil(math.log2(8.0 / 1e-12))
    assert est.iterations <= 200
