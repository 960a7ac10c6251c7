"""Inertia-preserving factorization of rank-structured matrices."""

import numpy as np
import pytest

from conftest import dense_of, eigs_of, make_H
from h2slice.compress import construct, matrix_kernel, shift_diagonal
from h2slice.errors import ShiftHitEigenvalue
from h2slice.geometry import PointCloud
from h2slice.gldl import InertiaCount, generalized_ldl, inertia
from h2slice.partition import build_tree, flat_structure


def test_inertia_count_fields():
    c = InertiaCount(3, 1, 5)
    assert c.n == 9
    assert c.as_tuple() == (3, 1, 5)


def test_root_only_tree_matches_dense():
    # n below leaf size: the engine reduces to one dense factorization
    A = np.diag(np.arange(1.0, 9.0))
    cloud = PointCloud(np.arange(8.0).reshape(-1, 1))
    tree = build_tree(cloud, 32)
    H = construct(matrix_kernel(A), tree, flat_structure(tree), 1e-9)
    assert inertia(H, 3.5).as_tuple() == (3, 0, 5)
    assert inertia(H, 0.0).as_tuple() == (0, 0, 8)
    assert inertia(H, 100.0).as_tuple() == (8, 0, 0)


@pytest.mark.parametrize("kind,n,leaf", [("circle", 256, 32), ("grid1d", 256, 32),
                                         ("grid3d", 6, 16)])
@pytest.mark.parametrize("fmt", ["blr2", "hss", "h2"])
def test_inertia_matches_dense_eigencounts(kind, n, leaf, fmt):
    eps = 1e-8
    H = make_H(kind, fmt, n, eps, leaf=leaf)
    w = eigs_of(kind, fmt, n, eps, leaf=leaf)
    scale = max(abs(w[0]), abs(w[-1]))
    rng = np.random.default_rng(hash((kind, fmt)) % 2**32)
    mus = rng.uniform(w[0] - 0.05 * scale, w[-1] + 0.05 * scale, size=12)
    # keep shifts clear of eigenvalues so the dense count is unambiguous
    mus = [m for m in mus if np.min(np.abs(w - m)) > 10 * eps * scale]
    assert len(mus) >= 8
    for mu in mus:
        c = inertia(H, mu)
        want = int(np.sum(w < mu))
        assert (c.neg, c.zero) == (want, 0), f"mu={mu}"


def test_inertia_endpoints():
    H = make_H("circle", "hss", 128, 1e-8)
    w = eigs_of("circle", "hss", 128, 1e-8)
    below = inertia(H, float(w[0] - 1.0))
    above = inertia(H, float(w[-1] + 1.0))
    assert below.as_tuple() == (0, 0, 128)
    assert above.as_tuple() == (128, 0, 0)


def test_factorization_residual_weak_formats_exact():
    # no fill-in is created under weak admissibility: congruence is exact
    for fmt in ("blr2", "hss"):
        H = make_H("circle", fmt, 256, 1e-8)
        A = dense_of("circle", fmt, 256, 1e-8)
        mu = 987.125
        f = generalized_ldl(shift_diagonal(H, mu), keep_factors=True)
        resid = np.linalg.norm(f.reconstruct() - (A - mu * np.eye(256)), 2)
        assert resid < 1e-9 * np.linalg.norm(A, 2), fmt
        assert f.stats["fill_blocks"] == 0


def test_factorization_residual_strong_bounded():
    eps = 1e-8
    H = make_H("grid1d", "h2", 256, eps)
    A = dense_of("grid1d", "h2", 256, eps)
    nrm = np.linalg.norm(A, 2)
    rng = np.random.default_rng(55)
    w = eigs_of("grid1d", "h2", 256, eps)
    for mu in rng.uniform(w[0], w[-1], size=5):
        f = generalized_ldl(shift_diagonal(H, float(mu)), keep_factors=True)
        resid = np.linalg.norm(f.reconstruct() - (A - mu * np.eye(256)), 2)
        assert resid <= 50 * eps * nrm, f"mu={mu}: {resid}"
        assert f.stats["fill_blocks"] > 0  # strong 1D chain must create fill


def test_keep_factors_flag():
    H = make_H("circle", "hss", 128, 1e-8)
    f0 = generalized_ldl(shift_diagonal(H, 1000.0))
    assert not f0.kept
    with pytest.raises(Exception):
        f0.reconstruct()
    f1 = generalized_ldl(shift_diagonal(H, 1000.0), keep_factors=True)
    assert f1.kept
    assert f1.reconstruct().shape == (128, 128)


def test_inertia_counts_sum_to_n():
    H = make_H("grid2d", "h2", 10, 1e-7, leaf=8)
    for mu in (0.0, 500.0, 990.0, 1010.0):
        c = inertia(H, mu)
        assert c.n == 100
        assert c.zero == 0


def test_shift_hit_eigenvalue_retries():
    # diag(1..8): shift exactly on an eigenvalue still returns, via retry
    A = np.diag(np.arange(1.0, 9.0))
    cloud = PointCloud(np.arange(8.0).reshape(-1, 1))
    tree = build_tree(cloud, 32)
    H = construct(matrix_kernel(A), tree, flat_structure(tree), 1e-9)
    c = inertia(H, 4.0)
    # retry nudges upward, so the hit eigenvalue lands below the shift
    assert c.as_tuple() == (4, 0, 4)


def test_shift_hit_eigenvalue_no_retry_raises():
    from h2slice.errors import InertiaUnstable

    A = np.diag(np.arange(1.0, 9.0))
    cloud = PointCloud(np.arange(8.0).reshape(-1, 1))
    tree = build_tree(cloud, 32)
    H = construct(matrix_kernel(A), tree, flat_structure(tree), 1e-9)
    with pytest.raises(InertiaUnstable) as exc_info:
        inertia(H, 4.0, max_retries=0)
    assert isinstance(exc_info.value.__cause__, ShiftHitEigenvalue)


def test_factorization_stats_keys():
    H = make_H("grid1d", "h2", 256, 1e-8)
    f = generalized_ldl(shift_diagonal(H, 500.0))
    for key in ("fill_blocks", "recompressions", "rank_added", "dropped_fro", "max_front"):
        assert key in f.stats
    assert f.stats["max_front"] > 0


def test_flat_and_hierarchical_agree():
    # same matrix, two elimination orders, identical inertia
    for mu in (900.0, 1000.0, 1100.0):
        c_flat = inertia(make_H("circle", "blr2", 192, 1e-8), mu)
        c_hier = inertia(make_H("circle", "hss", 192, 1e-8), mu)
        assert c_flat.as_tuple() == c_hier.as_tuple()


def test_factorization_shift_matches_request():
    H = make_H("circle", "hss", 128, 1e-8)
    f = generalized_ldl(shift_diagonal(H, 950.0))
    assert f.shift == 950.0
    assert f.n == 128
