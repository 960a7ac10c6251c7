"""Compiled inner loops: pivoted LDL^T and a cyclic Jacobi eigensolver.

The factorization follows the classic partial-pivoting strategy for symmetric
indefinite matrices (LAPACK dsytf2, lower variant): at each column either a
1x1 or a symmetric 2x2 pivot is chosen with the alpha = (1 + sqrt(17))/8 test,
rows/columns are interchanged, and the trailing lower triangle is updated.
Only the lower triangle of the input is referenced or written.

``fallback.py`` carries a NumPy implementation of the same contracts; the
``_core`` package picks whichever backend imports.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


def bk_factor(double[:, ::1] A, long long[::1] ipiv, double tol):
    """Factor A in place; fill ipiv. Returns 0, or k+1 if column k has a
    singular pivot (magnitude at or below tol for 1x1 blocks, determinant
    at or below tol * max|block| for 2x2 blocks).

    Pivot encoding: ipiv[k] == kp >= 0 means a 1x1 pivot with rows k and kp
    interchanged; ipiv[k] == ipiv[k+1] == -(kp+1) means a 2x2 pivot across
    columns k, k+1 with rows k+1 and kp interchanged.
    """
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t k = 0, i, j, imax, kp, kk, kstep
    cdef double alpha = (1.0 + sqrt(17.0)) / 8.0
    cdef double absakk, colmax, rowmax, v, t
    cdef double d, r1, wj, d11, d21, d22, det, bmax, wk, wkp1

    while k < n:
        kstep = 1
        absakk = fabs(A[k, k])
        imax = k
        colmax = 0.0
        if k < n - 1:
            for i in range(k + 1, n):
                v = fabs(A[i, k])
                if v > colmax:
                    colmax = v
                    imax = i

        if absakk >= alpha * colmax:
            kp = k
        else:
            rowmax = 0.0
            for j in range(k, imax):
                v = fabs(A[imax, j])
                if v > rowmax:
                    rowmax = v
            for i in range(imax + 1, n):
                v = fabs(A[i, imax])
                if v > rowmax:
                    rowmax = v
            if absakk * rowmax >= alpha * colmax * colmax:
                kp = k
            elif fabs(A[imax, imax]) >= alpha * rowmax:
                kp = imax
            else:
                kp = imax
                kstep = 2

        kk = k + kstep - 1
        if kp != kk:
            # symmetric interchange of rows/columns kk and kp within the
            # trailing submatrix, lower triangle storage
            for i in range(kp + 1, n):
                t = A[i, kk]
                A[i, kk] = A[i, kp]
                A[i, kp] = t
            for j in range(kk + 1, kp):
                t = A[j, kk]
                A[j, kk] = A[kp, j]
                A[kp, j] = t
            t = A[kk, kk]
            A[kk, kk] = A[kp, kp]
            A[kp, kp] = t
            if kstep == 2:
                t = A[kk, k]
                A[kk, k] = A[kp, k]
                A[kp, k] = t

        if kstep == 1:
            d = A[k, k]
            if fabs(d) <= tol:
                return k + 1
            r1 = 1.0 / d
            for j in range(k + 1, n):
                wj = r1 * A[j, k]
                for i in range(j, n):
                    A[i, j] -= A[i, k] * wj
            for i in range(k + 1, n):
                A[i, k] *= r1
            ipiv[k] = kp
        else:
            d21 = A[k + 1, k]
            det = A[k, k] * A[k + 1, k + 1] - d21 * d21
            bmax = fabs(d21)
            if fabs(A[k, k]) > bmax:
                bmax = fabs(A[k, k])
            if fabs(A[k + 1, k + 1]) > bmax:
                bmax = fabs(A[k + 1, k + 1])
            if fabs(det) <= tol * bmax:
                return k + 1
            if k < n - 2:
                d11 = A[k + 1, k + 1] / d21
                d22 = A[k, k] / d21
                t = 1.0 / (d11 * d22 - 1.0)
                d21 = t / d21
                for j in range(k + 2, n):
                    wk = d21 * (d11 * A[j, k] - A[j, k + 1])
                    wkp1 = d21 * (d22 * A[j, k + 1] - A[j, k])
                    for i in range(j, n):
                        A[i, j] -= A[i, k] * wk + A[i, k + 1] * wkp1
                    A[j, k] = wk
                    A[j, k + 1] = wkp1
            ipiv[k] = -(kp + 1)
            ipiv[k + 1] = -(kp + 1)
        k += kstep
    return 0


def bk_inertia(double[:, ::1] A, long long[::1] ipiv, double zero_tol):
    """Count (neg, zero, pos) eigenvalue signs of the block-diagonal D held
    in a factored matrix. 2x2 blocks always split into one negative and one
    positive eigenvalue when their determinant is negative; degenerate signs
    are resolved through determinant and trace."""
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t k = 0
    cdef long long neg = 0, zero = 0, pos = 0
    cdef double d, det, tr

    while k < n:
        if ipiv[k] >= 0:
            d = A[k, k]
            if fabs(d) <= zero_tol:
                zero += 1
            elif d < 0.0:
                neg += 1
            else:
                pos += 1
            k += 1
        else:
            det = A[k, k] * A[k + 1, k + 1] - A[k + 1, k] * A[k + 1, k]
            tr = A[k, k] + A[k + 1, k + 1]
            if det < -zero_tol * zero_tol:
                neg += 1
                pos += 1
            elif det > zero_tol * zero_tol:
                if tr < 0.0:
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
            k += 2
    return neg, zero, pos


def jacobi_eigvals(double[:, ::1] A, double tol, int max_sweeps):
    """All eigenvalues of a symmetric matrix by cyclic-by-row Jacobi
    rotations on full storage. Sweeps run until the off-diagonal Frobenius
    norm is at or below tol * ||A||_F. Returns (ascending eigenvalues,
    sweeps, final off-diagonal norm)."""
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t p, q, i, sweeps
    cdef double fro = 0.0, off, target, skip, apq, app, aqq
    cdef double theta, tt, c, s, aip, aiq

    for p in range(n):
        for q in range(n):
            fro += A[p, q] * A[p, q]
    fro = sqrt(fro)
    target = tol * fro
    if n < 2 or fro == 0.0:
        vals0 = np.sort(np.asarray(A).diagonal().copy())
        return vals0, 0, 0.0

    # rotations below `skip` are deferred; a full pass of skipped rotations
    # still leaves the off-diagonal norm under target
    skip = target / n

    sweeps = 0
    off = _offnorm(A)
    while off > target and sweeps < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if fabs(apq) <= skip:
                    continue
                app = A[p, p]
                aqq = A[q, q]
                theta = 0.5 * (aqq - app) / apq
                if fabs(theta) > 1e150:
                    tt = 0.5 / theta
                else:
                    tt = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        tt = -tt
                c = 1.0 / sqrt(tt * tt + 1.0)
                s = tt * c
                A[p, p] = app - tt * apq
                A[q, q] = aqq + tt * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                for i in range(n):
                    if i == p or i == q:
                        continue
                    aip = A[i, p]
                    aiq = A[i, q]
                    A[i, p] = c * aip - s * aiq
                    A[p, i] = A[i, p]
                    A[i, q] = s * aip + c * aiq
                    A[q, i] = A[i, q]
        sweeps += 1
        off = _offnorm(A)

    vals = np.empty(n, dtype=np.float64)
    for p in range(n):
        vals[p] = A[p, p]
    vals.sort()
    return vals, sweeps, off


cdef double _offnorm(double[:, ::1] A):
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t p, q
    cdef double acc = 0.0
    for p in range(n - 1):
        for q in range(p + 1, n):
            acc += A[p, q] * A[p, q]
    return sqrt(2.0 * acc)
