"""NumPy implementations of the compiled kernels.

Same contracts as ``_kernels.pyx``. The trailing updates here run on the full
square array for vectorization; entries above the diagonal are scratch and
never read back, matching the lower-triangle storage convention of the
compiled path.
"""

import numpy as np

_ALPHA = (1.0 + np.sqrt(17.0)) / 8.0


def bk_factor(A, ipiv, tol):
    """Pivoted symmetric-indefinite factorization, lower storage, in place.

    Returns 0 on success or k+1 when column k yields a singular pivot.
    Pivot encoding matches the compiled kernel: ipiv[k] = kp for a 1x1 pivot
    (rows k, kp interchanged), ipiv[k] = ipiv[k+1] = -(kp+1) for a 2x2 pivot
    (rows k+1, kp interchanged).
    """
    n = A.shape[0]
    k = 0
    while k < n:
        kstep = 1
        absakk = abs(A[k, k])
        if k < n - 1:
            col = np.abs(A[k + 1 :, k])
            imax = k + 1 + int(np.argmax(col))
            colmax = col[imax - k - 1]
        else:
            imax = k
            colmax = 0.0

        if absakk >= _ALPHA * colmax:
            kp = k
        else:
            rowmax = 0.0
            if imax > k:
                rowmax = float(np.max(np.abs(A[imax, k:imax])))
            if imax < n - 1:
                rowmax = max(rowmax, float(np.max(np.abs(A[imax + 1 :, imax]))))
            if absakk * rowmax >= _ALPHA * colmax * colmax:
                kp = k
            elif abs(A[imax, imax]) >= _ALPHA * rowmax:
                kp = imax
            else:
                kp = imax
                kstep = 2

        kk = k + kstep - 1
        if kp != kk:
            if kp + 1 < n:
                A[kp + 1 :, [kk, kp]] = A[kp + 1 :, [kp, kk]]
            for j in range(kk + 1, kp):
                A[j, kk], A[kp, j] = A[kp, j], A[j, kk]
            A[kk, kk], A[kp, kp] = A[kp, kp], A[kk, kk]
            if kstep == 2:
                A[kk, k], A[kp, k] = A[kp, k], A[kk, k]

        if kstep == 1:
            d = A[k, k]
            if abs(d) <= tol:
                return k + 1
            if k < n - 1:
                w = A[k + 1 :, k] / d
                A[k + 1 :, k + 1 :] -= np.outer(A[k + 1 :, k], w)
                A[k + 1 :, k] = w
            ipiv[k] = kp
        else:
            d21 = A[k + 1, k]
            det = A[k, k] * A[k + 1, k + 1] - d21 * d21
            bmax = max(abs(A[k, k]), abs(A[k + 1, k + 1]), abs(d21))
            if abs(det) <= tol * bmax:
                return k + 1
            if k < n - 2:
                d11 = A[k + 1, k + 1] / d21
                d22 = A[k, k] / d21
                t = 1.0 / (d11 * d22 - 1.0)
                d21i = t / d21
                colk = A[k + 2 :, k].copy()
                colk1 = A[k + 2 :, k + 1].copy()
                wk = d21i * (d11 * colk - colk1)
                wkp1 = d21i * (d22 * colk1 - colk)
                A[k + 2 :, k + 2 :] -= np.outer(colk, wk) + np.outer(colk1, wkp1)
                A[k + 2 :, k] = wk
                A[k + 2 :, k + 1] = wkp1
            ipiv[k] = -(kp + 1)
            ipiv[k + 1] = -(kp + 1)
        k += kstep
    return 0


def bk_inertia(A, ipiv, zero_tol):
    """Sign counts (neg, zero, pos) of the factored block diagonal."""
    n = A.shape[0]
    neg = zero = pos = 0
    k = 0
    while k < n:
        if ipiv[k] >= 0:
            d = A[k, k]
            if abs(d) <= zero_tol:
                zero += 1
            elif d < 0.0:
                neg += 1
            else:
                pos += 1
            k += 1
        else:
            det = A[k, k] * A[k + 1, k + 1] - A[k + 1, k] ** 2
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


def jacobi_eigvals(A, tol, max_sweeps):
    """Cyclic-by-row Jacobi eigenvalues on full symmetric storage.

    Returns (ascending eigenvalues, sweeps, final off-diagonal norm).
    """
    n = A.shape[0]
    fro = float(np.linalg.norm(A))
    target = tol * fro
    if n < 2 or fro == 0.0:
        return np.sort(np.diagonal(A).copy()), 0, 0.0
    skip = target / n

    def offnorm():
        return float(np.sqrt(max(0.0, np.linalg.norm(A) ** 2 - np.linalg.norm(np.diagonal(A)) ** 2)))

    sweeps = 0
    off = offnorm()
    idx = np.arange(n)
    while off > target and sweeps < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                app = A[p, p]
                aqq = A[q, q]
                theta = 0.5 * (aqq - app) / apq
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                mask = (idx != p) & (idx != q)
                aip = A[mask, p].copy()
                aiq = A[mask, q].copy()
                A[mask, p] = c * aip - s * aiq
                A[mask, q] = s * aip + c * aiq
                A[p, mask] = A[mask, p]
                A[q, mask] = A[mask, q]
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = A[q, p] = 0.0
        sweeps += 1
        off = offnorm()
    return np.sort(np.diagonal(A).copy()), sweeps, off
