"""Exception types shared across the package."""


class H2SliceError(Exception):
    """Base class for all package-specific errors."""


class Breakdown(H2SliceError):
    """A pivot block in a symmetric-indefinite factorization is singular."""

    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"singular pivot at column {column}")


class ShiftHitEigenvalue(H2SliceError):
    """The shifted matrix A - mu*I is numerically singular at this shift."""

    def __init__(self, mu, message=None):
        self.mu = mu
        super().__init__(message or f"shift {mu!r} hit an eigenvalue (singular pivot)")


class InertiaUnstable(H2SliceError):
    """Repeated shift perturbations failed to produce a stable inertia count."""

    def __init__(self, mu, attempts, message=None):
        self.mu = mu
        self.attempts = attempts
        super().__init__(
            message or f"inertia at shift {mu!r} unstable after {attempts} perturbed retries"
        )


class NotInInterval(H2SliceError):
    """The requested eigenvalue index is not bracketed by the search interval."""

    def __init__(self, k, a, b, message=None):
        self.k = k
        self.interval = (a, b)
        super().__init__(message or f"eigenvalue #{k} does not lie in ({a}, {b}]")


class OracleTooLarge(H2SliceError):
    """A dense fallback (oracle or reconstruction) was requested above its size cap."""

    def __init__(self, n, cap, message=None):
        self.n = n
        self.cap = cap
        super().__init__(message or f"dense operation of size {n} exceeds cap {cap}")


class IncompleteSpectrum(H2SliceError):
    """A parallel solve finished with unresolved eigenvalue indices."""

    def __init__(self, unresolved, message=None):
        self.unresolved = sorted(unresolved)
        super().__init__(message or f"unresolved eigenvalue indices: {self.unresolved}")


class ConfigError(H2SliceError):
    """Invalid configuration or input file content."""
