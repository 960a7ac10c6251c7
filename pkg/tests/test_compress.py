"""Rank-structured construction: accuracy, nested bases, shifts, file IO."""

import numpy as np
import pytest

from conftest import exact_kernel_matrix, make_cloud, make_H
from h2slice.compress import (
    construct,
    load_matrix_file,
    matrix_kernel,
    reconstruct_dense,
    save_matrix_file,
    shift_diagonal,
)
from h2slice.errors import OracleTooLarge
from h2slice.geometry import laplace_kernel
from h2slice.partition import WEAK, build_tree, classify, flat_structure, strong


@pytest.mark.parametrize("kind,n", [("circle", 128), ("grid1d", 160), ("grid2d", 12)])
@pytest.mark.parametrize("fmt", ["blr2", "hss", "h2"])
def test_reconstruction_accuracy(kind, n, fmt):
    eps = 1e-7
    H = make_H(kind, fmt, n, eps, leaf=16)
    A = exact_kernel_matrix(kind, n)
    err = np.linalg.norm(reconstruct_dense(H) - A, 2) / np.linalg.norm(A, 2)
    assert err < 50 * eps, f"{fmt} on {kind}: {err}"


def test_format_deduction():
    assert make_H("circle", "blr2", 64, 1e-6, leaf=16).fmt == "blr2"
    assert make_H("circle", "hss", 64, 1e-6, leaf=16).fmt == "hss"
    assert make_H("grid2d", "h2", 8, 1e-6, leaf=8).fmt == "h2"


def test_tighter_eps_lowers_error_and_raises_rank():
    kind, n = "circle", 128
    A = exact_kernel_matrix(kind, n)
    errs, ranks = [], []
    for eps in (1e-3, 1e-6, 1e-9):
        H = make_H(kind, "hss", n, eps, leaf=16)
        errs.append(np.linalg.norm(reconstruct_dense(H) - A, 2) / np.linalg.norm(A, 2))
        ranks.append(H.max_rank())
    assert errs[0] > errs[1] > errs[2]
    assert ranks[0] < ranks[1] < ranks[2]


def test_coupling_factorization_of_admissible_block():
    # classified low-rank block equals U_i C_ij U_j^T within the tolerance
    eps = 1e-8
    cloud = make_cloud("grid1d", 128)
    tree = build_tree(cloud, 16)
    st = classify(tree, strong(1.0))
    H = construct(laplace_kernel(cloud), tree, st, eps)
    A = exact_kernel_matrix("grid1d", 128)
    L = tree.depth
    pairs = st.lowrank_at(L)
    assert pairs, "instance must classify at least one leaf pair"
    for i, j in pairs[:4]:
        Ui = H.bases[(L, i)].U_S
        Uj = H.bases[(L, j)].U_S
        C = H.couplings[(L, i, j)]
        s_i, e_i = tree.index_range(L, i)
        s_j, e_j = tree.index_range(L, j)
        blk = A[s_i:e_i, s_j:e_j]
        err = np.linalg.norm(Ui @ C @ Uj.T - blk, 2)
        assert err <= 60 * eps * np.linalg.norm(A, 2)


def test_nested_basis_transfer():
    # transfer-composed bases stay orthonormal all the way to leaf coordinates
    from h2slice.compress import _expand

    H = make_H("circle", "hss", 128, 1e-8, leaf=16)
    tree = H.tree
    cache = {}
    seen_upper = 0
    for (level, i) in H.bases:
        U = _expand(tree, H.bases, level, i, cache)
        assert U.shape[0] == tree.size(level, i)
        assert np.max(np.abs(U.T @ U - np.eye(U.shape[1]))) < 1e-11
        seen_upper += level < tree.depth
    assert seen_upper > 0, "instance must exercise transfer levels"


def test_shift_diagonal_exact():
    H = make_H("circle", "hss", 96, 1e-8, leaf=16)
    A = reconstruct_dense(H)
    mu = 3.25
    Hs = shift_diagonal(H, mu)
    As = reconstruct_dense(Hs)
    assert np.max(np.abs(As - (A - mu * np.eye(96)))) < 1e-11
    assert Hs.shift == mu
    # shifts accumulate
    Hss = shift_diagonal(Hs, -1.25)
    assert Hss.shift == 2.0
    assert np.max(np.abs(reconstruct_dense(Hss) - (A - 2.0 * np.eye(96)))) < 1e-11


def test_shifted_copy_severs_origin():
    H = make_H("circle", "hss", 96, 1e-8, leaf=16)
    Hs = shift_diagonal(H, 1.5)
    Hc = Hs.copy()
    assert Hc.origin() is Hc
    assert Hs.origin() is H
    # same content either way
    d1 = Hs.skeleton_diag(0)
    d2 = Hc.skeleton_diag(0)
    assert np.max(np.abs(d1 - d2)) < 1e-12


def test_skeleton_diag_shift_consistency():
    H = make_H("circle", "hss", 96, 1e-8, leaf=16)
    mu = 0.75
    Hs = shift_diagonal(H, mu)
    d0 = H.skeleton_diag(1)
    d1 = Hs.skeleton_diag(1)
    assert np.max(np.abs((d0 - mu * np.eye(d0.shape[0])) - d1)) < 1e-12


def test_skeleton_blocks_are_private_copies():
    H = make_H("circle", "hss", 96, 1e-8, leaf=16)
    d1 = H.skeleton_diag(0)
    d1[0, 0] += 99.0
    d2 = H.skeleton_diag(0)
    assert d2[0, 0] != d1[0, 0]


def test_max_rank_and_storage_positive():
    H = make_H("circle", "hss", 128, 1e-6, leaf=16)
    assert H.max_rank() > 0
    assert H.storage_bytes() > 0
    # compressed storage beats dense storage on this instance
    assert H.storage_bytes() < 128 * 128 * 8


def test_scale_estimate_tracks_shift():
    H = make_H("circle", "hss", 96, 1e-8, leaf=16)
    s0 = H.scale_estimate()
    assert s0 >= 1000.0  # diagonal kernel value
    s1 = shift_diagonal(H, -500.0).scale_estimate()
    assert s1 >= s0


def test_reconstruct_dense_cap():
    H = make_H("circle", "hss", 96, 1e-8, leaf=16)
    with pytest.raises(OracleTooLarge):
        reconstruct_dense(H, cap=32)


def test_matrix_file_roundtrip(tmp_path):
    rng = np.random.default_rng(31)
    A = rng.standard_normal((41, 41))
    A = (A + A.T) / 2
    path = tmp_path / "m.mat"
    save_matrix_file(path, A)
    B = load_matrix_file(path)
    assert np.array_equal(A, B)


def test_matrix_file_header_is_ascii_count(tmp_path):
    A = np.eye(3)
    path = tmp_path / "m.mat"
    save_matrix_file(path, A)
    raw = path.read_bytes()
    assert raw.startswith(b"3\n")
    # 6 lower-triangle doubles follow
    assert len(raw) == 2 + 6 * 8


def test_matrix_kernel_roundtrip():
    rng = np.random.default_rng(33)
    A = rng.standard_normal((20, 20))
    A = (A + A.T) / 2
    K = matrix_kernel(A)
    idx = np.arange(20)
    assert np.array_equal(K.block(idx, idx), A)


def test_construct_through_dense_kernel_matches_laplace():
    # building from an explicit matrix equals building from the kernel
    kind, n, eps = "circle", 96, 1e-8
    A = exact_kernel_matrix(kind, n)
    cloud = make_cloud(kind, n)
    tree = build_tree(cloud, 16)
    st = classify(tree, WEAK)
    H1 = construct(laplace_kernel(cloud), tree, st, eps)
    H2 = construct(matrix_kernel(A), tree, st, eps)
    assert np.max(np.abs(reconstruct_dense(H1) - reconstruct_dense(H2))) < 1e-12


def test_flat_format_exactness_small():
    # depth-zero tree stores the matrix verbatim
    cloud = make_cloud("circle", 24)
    tree = build_tree(cloud, 32)
    assert tree.depth == 0
    H = construct(laplace_kernel(cloud), tree, flat_structure(tree), 1e-6)
    A = exact_kernel_matrix("circle", 24)
    assert np.max(np.abs(reconstruct_dense(H) - A)) < 1e-12
