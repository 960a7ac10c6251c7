"""Shared builders for the test suite.

Instances are cached per (kind, fmt, n, eps, leaf, eta) so expensive
constructions and dense oracles are reused across tests. Callers must
treat cached objects as read-only; anything that mutates takes a copy.
"""

import functools

import numpy as np
import pytest

from h2slice.compress import construct, reconstruct_dense
from h2slice.geometry import generate_circle, generate_grid, laplace_kernel, sfc_order
from h2slice.partition import WEAK, build_tree, classify, flat_structure, strong


def make_cloud(kind, n):
    """kind: 'circle', 'grid1d', 'grid2d', 'grid3d'. n is total or per-axis."""
    if kind == "circle":
        cloud = generate_circle(n)
    elif kind == "grid1d":
        cloud = generate_grid(n, 1)
    elif kind == "grid2d":
        cloud = generate_grid(n, 2)
    elif kind == "grid3d":
        cloud = generate_grid(n, 3)
    else:
        raise ValueError(kind)
    return cloud.permuted(sfc_order(cloud))


@functools.lru_cache(maxsize=64)
def make_H(kind, fmt, n, eps, leaf=32, eta=1.0):
    cloud = make_cloud(kind, n)
    tree = build_tree(cloud, leaf)
    if fmt == "blr2":
        st = flat_structure(tree)
    elif fmt == "hss":
        st = classify(tree, WEAK)
    elif fmt == "h2":
        st = classify(tree, strong(eta))
    else:
        raise ValueError(fmt)
    return construct(laplace_kernel(cloud), tree, st, eps)


@functools.lru_cache(maxsize=64)
def dense_of(kind, fmt, n, eps, leaf=32, eta=1.0):
    H = make_H(kind, fmt, n, eps, leaf, eta)
    return reconstruct_dense(H)


@functools.lru_cache(maxsize=64)
def eigs_of(kind, fmt, n, eps, leaf=32, eta=1.0):
    """LAPACK eigenvalues of the reconstructed compressed matrix."""
    return np.linalg.eigvalsh(dense_of(kind, fmt, n, eps, leaf, eta))


def exact_kernel_matrix(kind, n):
    cloud = make_cloud(kind, n)
    idx = np.arange(cloud.n)
    return laplace_kernel(cloud).block(idx, idx)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
