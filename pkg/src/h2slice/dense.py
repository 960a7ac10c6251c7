"""Dense building blocks: pivoted LDL^T, inertia counts, truncated
rank-revealing QR, and a Jacobi eigenvalue oracle.

The LDL^T factorization uses 1x1 and 2x2 pivots so that the inertia of an
indefinite matrix can be read off the block diagonal (Sylvester's law of
inertia is preserved under the congruence P A P^T = L D L^T).
"""

import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _core
from .errors import Breakdown, OracleTooLarge

PIVOT_TOL_FACTOR = 1e3  # singularity threshold: 1e3 * eps * max|A|
ORACLE_CAP_ENV = "H2SPEC_ORACLE_CAP"
_DEFAULT_ORACLE_CAP = 4096
JACOBI_TOL = 1e-12  # off-diagonal target relative to ||A||_F


def _oracle_cap():
    raw = os.environ.get(ORACLE_CAP_ENV)
    if raw:
        return int(raw)
    return _DEFAULT_ORACLE_CAP


@dataclass
class LdlResult:
    """P A P^T = L D L^T with unit lower-triangular L and block-diagonal D.

    ``perm`` holds the row permutation as an index vector: the factorization
    satisfies A[perm][:, perm] == L @ D @ L.T. ``block_sizes`` lists the
    pivot block sizes (1 or 2) in elimination order.
    """

    L: np.ndarray
    D: np.ndarray
    perm: np.ndarray
    block_sizes: list

    @property
    def n(self):
        return self.L.shape[0]


def pivot_tolerance(A):
    """Singularity threshold used by ldl_symmetric for the given matrix."""
    amax = float(np.max(np.abs(A))) if A.size else 0.0
    return PIVOT_TOL_FACTOR * np.finfo(np.float64).eps * amax


def _bk_packed(A):
    """Run the raw kernel on a copy. Returns (packed, ipiv, tol).

    Raises Breakdown when a pivot block is singular with respect to the
    1e3 * eps * max|A| threshold.
    """
    n = A.shape[0]
    packed = np.array(A, dtype=np.float64, order="C", copy=True)
    ipiv = np.zeros(n, dtype=np.int64)
    tol = pivot_tolerance(packed)
    info = _core.bk_factor(packed, ipiv, tol)
    if info != 0:
        raise Breakdown(info - 1)
    return packed, ipiv, tol


def _unpack(packed, ipiv):
    """Build explicit L, D, perm, block_sizes from the packed factor.

    Interchanges recorded at step k act on rows of the already-formed
    columns 0..k-1, exactly undoing the in-place row swaps of the kernel.
    """
    n = packed.shape[0]
    L = np.eye(n)
    D = np.zeros((n, n))
    perm = np.arange(n)
    sizes = []
    k = 0
    while k < n:
        if ipiv[k] >= 0:
            kp = int(ipiv[k])
            if kp != k:
                L[[k, kp], :k] = L[[kp, k], :k]
                perm[[k, kp]] = perm[[kp, k]]
            D[k, k] = packed[k, k]
            if k + 1 < n:
                L[k + 1 :, k] = packed[k + 1 :, k]
            sizes.append(1)
            k += 1
        else:
            kp = -int(ipiv[k]) - 1
            if kp != k + 1:
                L[[k + 1, kp], :k] = L[[kp, k + 1], :k]
                perm[[k + 1, kp]] = perm[[kp, k + 1]]
            D[k, k] = packed[k, k]
            D[k + 1, k + 1] = packed[k + 1, k + 1]
            D[k + 1, k] = D[k, k + 1] = packed[k + 1, k]
            if k + 2 < n:
                L[k + 2 :, k : k + 2] = packed[k + 2 :, k : k + 2]
            sizes.append(2)
            k += 2
    return L, D, perm, sizes


def ldl_symmetric(A):
    """Factor a symmetric matrix as P A P^T = L D L^T.

    D is block diagonal with 1x1 and 2x2 blocks chosen by partial pivoting;
    raises Breakdown when a pivot block is singular (determinant magnitude
    at or below 1e3 * eps * max|A|). Only the lower triangle of A is read.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("ldl_symmetric expects a square matrix")
    if A.shape[0] == 0:
        return LdlResult(np.zeros((0, 0)), np.zeros((0, 0)), np.arange(0), [])
    packed, ipiv, _ = _bk_packed(A)
    L, D, perm, sizes = _unpack(packed, ipiv)
    return LdlResult(L=L, D=D, perm=perm, block_sizes=sizes)


def inertia_of(res, zero_tol=None):
    """(neg, zero, pos) counts over the block diagonal of an LdlResult.

    2x2 blocks with negative determinant contribute one eigenvalue of each
    sign; remaining cases are resolved by determinant and trace signs.
    """
    D = res.D
    if zero_tol is None:
        dmax = float(np.max(np.abs(D))) if D.size else 0.0
        zero_tol = PIVOT_TOL_FACTOR * np.finfo(np.float64).eps * dmax
    neg = zero = pos = 0
    k = 0
    for s in res.block_sizes:
        if s == 1:
            d = D[k, k]
            if abs(d) <= zero_tol:
                zero += 1
            elif d < 0:
                neg += 1
            else:
                pos += 1
        else:
            det = D[k, k] * D[k + 1, k + 1] - D[k + 1, k] ** 2
            tr = D[k, k] + D[k + 1, k + 1]
            if det < -zero_tol * zero_tol:
                neg += 1
                pos += 1
            elif det > zero_tol * zero_tol:
                if tr < 0:
                    neg += 2
                else:
                    pos += 2
            else:
                zero += 1
                if tr < -zero_tol:
                    neg += 1
                elif tr > zero_tol:
                    pos += 1
                else:
                    zero += 1
        k += s
    return neg, zero, pos


@dataclass
class BasisSplit:
    """Orthogonal column split [U_S U_R] of R^m.

    U_S spans the retained (skeleton) directions, U_R the discarded
    (redundant) complement; hstack([U_S, U_R]) is square orthogonal.
    """

    U_S: np.ndarray
    U_R: np.ndarray

    @property
    def rank(self):
        return self.U_S.shape[1]

    @property
    def m(self):
        return self.U_S.shape[0]

    def square(self):
        """Full orthogonal matrix [U_R U_S] in redundant-first column order."""
        return np.hstack([self.U_R, self.U_S])


def rrqr_truncated(M, eps):
    """Rank-revealing QR with relative truncation.

    Returns a BasisSplit whose skeleton span satisfies
    ||U_S U_S^T M - M||_2 <= eps * ||M||_2. The rank is picked from the
    column-pivoted R factor: smallest r whose trailing block has Frobenius
    norm at or below eps * |R[0,0]| (|R[0,0]| is the standard operator-norm
    surrogate, and the Frobenius tail bounds the spectral tail from above,
    so the guarantee is conservative).
    """
    M = np.asarray(M, dtype=np.float64)
    m = M.shape[0]
    if M.size == 0 or not np.any(M):
        return BasisSplit(U_S=np.zeros((m, 0)), U_R=np.eye(m))
    Q, R, _ = scipy.linalg.qr(M, mode="full", pivoting=True)
    k = min(M.shape)
    diag = np.abs(np.diagonal(R[:k, :k]))
    # cumulative Frobenius mass of trailing rows of R
    row_mass = np.sum(R[:k, :] ** 2, axis=1)
    tail = np.sqrt(np.maximum(0.0, np.cumsum(row_mass[::-1])[::-1]))
    bound = eps * diag[0]
    rank = k
    for r in range(k):
        if tail[r] <= bound:
            rank = r
            break
    return BasisSplit(U_S=Q[:, :rank].copy(), U_R=Q[:, rank:].copy())


def eig_oracle(A, cap=None):
    """All eigenvalues (ascending) by cyclic Jacobi rotations.

    Serves as the dense validation path, independent of the factorization
    code. Raises OracleTooLarge above the size cap (default 4096, override
    with the H2SPEC_ORACLE_CAP environment variable).
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if cap is None:
        cap = _oracle_cap()
    if n > cap:
        raise OracleTooLarge(n, cap)
    work = np.array(A, dtype=np.float64, order="C", copy=True)
    vals, _, _ = _core.jacobi_eigvals(work, JACOBI_TOL, 100)
    return vals


def gershgorin_interval(A):
    """Closed interval [a, b] containing all eigenvalues, from row sums."""
    A = np.asarray(A, dtype=np.float64)
    d = np.diagonal(A)
    radii = np.sum(np.abs(A), axis=1) - np.abs(d)
    return float(np.min(d - radii)), float(np.max(d + radii))
