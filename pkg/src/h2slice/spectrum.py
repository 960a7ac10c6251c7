"""Eigenvalue location by inertia bisection.

The count nu(mu) of eigenvalues below a shift equals the number of negative
pivots in a symmetric factorization of A - mu*I, so the k-th smallest
eigenvalue can be bracketed by bisection on mu without ever forming
eigenvectors. Midpoints always descend the standard bisection grid of the
original interval; a cached count at another shift is used only to resolve
the branch through monotonicity (a count >= k at some mu' <= mu, or < k at
some mu' >= mu, decides the branch without a factorization). Estimates are
therefore bitwise reproducible across cache states, worker counts, and task
arrival order.
"""

import bisect
import json
import threading
import time
from dataclasses import asdict, dataclass

import numpy as np

from .compress import reconstruct_dense, shift_diagonal
from .dense import eig_oracle, gershgorin_interval
from .errors import ConfigError, H2SliceError, NotInInterval, OracleTooLarge
from .gldl import generalized_ldl, inertia

EPS_EV_DEFAULT = 1e-5
MAX_BISECT_ITERATIONS = 200


@dataclass
class EigenvalueEstimate:
    """Bisection output: value is the bracket midpoint, so the true
    eigenvalue of the compressed matrix lies within half_width of it."""

    k: int
    value: float
    half_width: float
    iterations: int
    inertia_evals: int
    wall_time: float

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @staticmethod
    def from_json(text):
        data = json.loads(text)
        return EigenvalueEstimate(**data)


class InertiaCache:
    """Monotone store of evaluated shift counts, shared across slices.

    Keys are exact float shifts kept sorted; lookups exploit that nu is
    non-decreasing in mu. Thread-safe so a cache can back a worker that
    processes several tasks.
    """

    def __init__(self):
        self._keys = []
        self._vals = {}
        self._lock = threading.Lock()
        self.fresh_evals = 0
        self.hits = 0

    def __len__(self):
        return len(self._keys)

    def exact(self, mu):
        with self._lock:
            return self._vals.get(mu)

    def le(self, mu):
        """Count at the largest cached shift <= mu, or None."""
        with self._lock:
            idx = bisect.bisect_right(self._keys, mu)
            if idx:
                return self._vals[self._keys[idx - 1]]
            return None

    def ge(self, mu):
        """Count at the smallest cached shift >= mu, or None."""
        with self._lock:
            idx = bisect.bisect_left(self._keys, mu)
            if idx < len(self._keys):
                return self._vals[self._keys[idx]]
            return None

    def insert(self, mu, nu):
        with self._lock:
            if mu not in self._vals:
                bisect.insort(self._keys, mu)
                self._vals[mu] = nu


def _branch(H, mu, k, cache):
    """True when nu(mu) >= k, resolved from the cache when possible."""
    lv = cache.le(mu)
    if lv is not None and lv >= k:
        cache.hits += 1
        return True
    gv = cache.ge(mu)
    if gv is not None and gv < k:
        cache.hits += 1
        return False
    v = inertia(H, mu).neg
    cache.insert(mu, v)
    cache.fresh_evals += 1
    return v >= k


def default_interval(H, cap=None):
    """Gershgorin bounds of the reconstructed matrix, upper end padded so
    the largest eigenvalue is strictly inside."""
    try:
        A = reconstruct_dense(H, cap)
    except OracleTooLarge as exc:
        raise OracleTooLarge(
            exc.n, exc.cap, message=f"{exc}; supply an explicit search interval"
        ) from None
    lo, hi = gershgorin_interval(A)
    pad = 1e-10 * max(1.0, abs(lo), abs(hi))
    return lo, hi + pad


def slice_spectrum(H, k, interval=None, eps_ev=EPS_EV_DEFAULT, cache=None):
    """Estimate the k-th smallest eigenvalue (1-based) of H by bisection.

    The search interval (a, b] must bracket the eigenvalue; endpoint counts
    are only verified when the loop itself never displaced that endpoint,
    keeping the factorization count at the bare bisection minimum.
    """
    t0 = time.perf_counter()
    n = H.n
    if not 1 <= k <= n:
        raise ConfigError(f"k={k} outside 1..{n}")
    if eps_ev <= 0:
        raise ConfigError("eps_ev must be positive")
    if interval is None:
        interval = default_interval(H)
    a0, b0 = float(interval[0]), float(interval[1])
    if not a0 < b0:
        raise ConfigError(f"empty search interval ({a0}, {b0})")
    if cache is None:
        cache = InertiaCache()
    fresh0 = cache.fresh_evals

    a, b = a0, b0
    lo_shown = False
    hi_shown = False
    iters = 0
    while b - a >= eps_ev:
        iters += 1
        if iters > MAX_BISECT_ITERATIONS:
            raise H2SliceError(
                f"bisection exceeded {MAX_BISECT_ITERATIONS} iterations; "
                f"interval ({a0}, {b0}) with eps_ev={eps_ev} is unreasonable"
            )
        mu = 0.5 * (a + b)
        if _branch(H, mu, k, cache):
            b = mu
            hi_shown = True
        else:
            a = mu
            lo_shown = True
    if not lo_shown and _branch(H, a0, k, cache):
        raise NotInInterval(k, a0, b0)
    if not hi_shown and not _branch(H, b0, k, cache):
        raise NotInInterval(k, a0, b0)
    return EigenvalueEstimate(
        k=k,
        value=0.5 * (a + b),
        half_width=0.5 * (b - a),
        iterations=iters,
        inertia_evals=cache.fresh_evals - fresh0,
        wall_time=time.perf_counter() - t0,
    )


def slice_range(H, k_lo, k_hi, interval=None, eps_ev=EPS_EV_DEFAULT, cache=None):
    """Estimates for every index in [k_lo, k_hi], sharing one cache.

    The two extreme indices are located first so that the inner bisections
    resolve mostly from cached counts; all slices search the same original
    interval, so each estimate is identical to a standalone call.
    """
    if k_lo > k_hi:
        raise ConfigError(f"empty index range [{k_lo}, {k_hi}]")
    if interval is None:
        interval = default_interval(H)
    if cache is None:
        cache = InertiaCache()
    out = {}
    order = [k_lo] if k_lo == k_hi else [k_lo, k_hi]
    order += list(range(k_lo + 1, k_hi))
    for k in order:
        out[k] = slice_spectrum(H, k, interval, eps_ev, cache)
    return [out[k] for k in range(k_lo, k_hi + 1)]


@dataclass
class ShiftAccuracyReport:
    """Outcome of comparing recorded factors against the compressed matrix."""

    mu: float
    residual_norm: float
    min_eig_gap: float
    matrix_norm: float
    satisfied: bool


def verify_shift_accuracy(H, mu, cap=None):
    """Check that the factorization residual at shift mu is dominated by the
    distance from mu to the nearest eigenvalue of the compressed matrix.

    When that holds, the inertia counted at mu is the exact inertia of the
    compressed shifted matrix, so bisection decisions are trustworthy.
    """
    f = generalized_ldl(shift_diagonal(H, mu), keep_factors=True)
    R = f.reconstruct()
    Ad = reconstruct_dense(H, cap)
    resid = float(np.linalg.norm(R - (Ad - mu * np.eye(H.n)), 2))
    vals = eig_oracle(Ad, cap)
    gap = float(np.min(np.abs(vals - mu)))
    norm = float(np.max(np.abs(vals))) if vals.size else 0.0
    return ShiftAccuracyReport(
        mu=mu,
        residual_norm=resid,
        min_eig_gap=gap,
        matrix_norm=norm,
        satisfied=resid <= gap,
    )
