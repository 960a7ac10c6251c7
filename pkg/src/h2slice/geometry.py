"""Point clouds, kernel functions, and space-filling-curve ordering."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

LAPLACE_OFFSET = 1e-3  # distance regularization in the kernel denominator
SFC_BITS = 16  # quantization bits per axis for the ordering curve


@dataclass(frozen=True)
class PointCloud:
    """Immutable set of points in 1, 2, or 3 dimensions."""

    coords: np.ndarray  # (n, dim) float64

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.ndim != 2:
            raise ConfigError("coords must be a 2-d array of shape (n, dim)")
        if c.shape[1] not in (1, 2, 3):
            raise ConfigError(f"unsupported dimension {c.shape[1]}")
        if c.size and not np.all(np.isfinite(c)):
            raise ConfigError("coords must be finite")
        object.__setattr__(self, "coords", c)

    @property
    def n(self):
        return self.coords.shape[0]

    @property
    def dim(self):
        return self.coords.shape[1]

    def subset(self, idx):
        return self.coords[idx]

    def permuted(self, order):
        return PointCloud(self.coords[order])


def generate_circle(n):
    """n points on the unit circle at angles 2*pi*i/n."""
    if n < 1:
        raise ConfigError("need at least one point")
    ang = 2.0 * np.pi * np.arange(n) / n
    return PointCloud(np.column_stack([np.cos(ang), np.sin(ang)]))


def generate_grid(n_per_axis, dim):
    """Regular grid with unit spacing: n_per_axis**dim points."""
    if n_per_axis < 1:
        raise ConfigError("need at least one point per axis")
    if dim not in (1, 2, 3):
        raise ConfigError(f"unsupported dimension {dim}")
    axes = [np.arange(n_per_axis, dtype=np.float64)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return PointCloud(np.column_stack([m.ravel() for m in mesh]))


class KernelFn:
    """Symmetric kernel over point indices.

    Subclasses implement ``block(I, J)`` returning the dense submatrix for
    the given index arrays; single entries fall out of a 1x1 block.
    """

    def __call__(self, i, j):
        return float(self.block(np.array([i]), np.array([j]))[0, 0])

    def block(self, I, J):
        raise NotImplementedError


class LaplaceKernel(KernelFn):
    """A[i, j] = 1 / (||x_i - x_j||_2 + 1e-3)."""

    def __init__(self, cloud):
        self.cloud = cloud

    def block(self, I, J):
        xi = self.cloud.coords[np.asarray(I, dtype=np.intp)]
        xj = self.cloud.coords[np.asarray(J, dtype=np.intp)]
        diff = xi[:, None, :] - xj[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        return 1.0 / (dist + LAPLACE_OFFSET)


class DenseKernel(KernelFn):
    """Kernel view of an explicit symmetric matrix."""

    def __init__(self, A):
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError("DenseKernel expects a square matrix")
        self.A = A

    def block(self, I, J):
        return self.A[np.ix_(np.asarray(I, dtype=np.intp), np.asarray(J, dtype=np.intp))]


def laplace_kernel(cloud):
    """Regularized inverse-distance kernel over a point cloud."""
    return LaplaceKernel(cloud)


def _spread2(v):
    v = v.astype(np.uint64)
    v = (v | (v << np.uint64(8))) & np.uint64(0x00FF00FF)
    v = (v | (v << np.uint64(4))) & np.uint64(0x0F0F0F0F)
    v = (v | (v << np.uint64(2))) & np.uint64(0x33333333)
    v = (v | (v << np.uint64(1))) & np.uint64(0x55555555)
    return v


def _spread3(v):
    v = v.astype(np.uint64)
    v = (v | (v << np.uint64(32))) & np.uint64(0x1F00000000FFFF)
    v = (v | (v << np.uint64(16))) & np.uint64(0x1F0000FF0000FF)
    v = (v | (v << np.uint64(8))) & np.uint64(0x100F00F00F00F00F)
    v = (v | (v << np.uint64(4))) & np.uint64(0x10C30C30C30C30C3)
    v = (v | (v << np.uint64(2))) & np.uint64(0x1249249249249249)
    return v


def sfc_order(cloud):
    """Permutation sorting points along a Morton (Z-order) curve.

    Coordinates are quantized to a 2^16 grid per axis first; dimension 1
    reduces to a stable coordinate sort. Deterministic for a given cloud.
    """
    c = cloud.coords
    if cloud.n == 0:
        return np.arange(0)
    lo = c.min(axis=0)
    extent = c.max(axis=0) - lo
    extent[extent == 0.0] = 1.0
    scale = (2**SFC_BITS) - 1
    q = np.floor((c - lo) / extent * scale).astype(np.uint64)
    q = np.minimum(q, np.uint64(scale))
    if cloud.dim == 1:
        key = q[:, 0]
    elif cloud.dim == 2:
        key = _spread2(q[:, 0]) | (_spread2(q[:, 1]) << np.uint64(1))
    else:
        key = (
            _spread3(q[:, 0])
            | (_spread3(q[:, 1]) << np.uint64(1))
            | (_spread3(q[:, 2]) << np.uint64(2))
        )
    return np.argsort(key, kind="stable")


def save_point_cloud(path, cloud):
    """Write the text format: a 'dim n' header line, then one point per line."""
    with open(path, "w") as fh:
        fh.write(f"{cloud.dim} {cloud.n}\n")
        for row in cloud.coords:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_point_cloud(path):
    """Read the 'dim n' header text format written by save_point_cloud."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ConfigError(f"{path}: expected 'dim n' header")
        try:
            dim, n = int(header[0]), int(header[1])
        except ValueError as exc:
            raise ConfigError(f"{path}: bad header {header!r}") from exc
        data = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if data.size == 0:
        data = np.zeros((0, dim))
    if data.shape != (n, dim):
        raise ConfigError(f"{path}: expected {n} x {dim} coordinates, got {data.shape}")
    return PointCloud(data)
