"""Rank-structured symmetric eigenvalue toolkit.

Compress a symmetric kernel matrix into BLR2/HSS/H2 form, factor shifted
copies with an inertia-preserving generalized LDL^T, and locate eigenvalues
by bisection on the inertia count, serially or in parallel.
"""

from ._core import BACKEND
from .compress import (
    RankStructuredMatrix,
    construct,
    load_matrix_file,
    reconstruct_dense,
    save_matrix_file,
    shift_diagonal,
)
from .dense import (
    BasisSplit,
    LdlResult,
    eig_oracle,
    gershgorin_interval,
    inertia_of,
    ldl_symmetric,
    rrqr_truncated,
)
from .errors import (
    Breakdown,
    ConfigError,
    H2SliceError,
    IncompleteSpectrum,
    InertiaUnstable,
    NotInInterval,
    OracleTooLarge,
    ShiftHitEigenvalue,
)
from .geometry import (
    LaplaceKernel,
    PointCloud,
    generate_circle,
    generate_grid,
    laplace_kernel,
    load_point_cloud,
    save_point_cloud,
    sfc_order,
)
from .gldl import GldlFactorization, InertiaCount, generalized_ldl, inertia
from .parallel import (
    ParallelResult,
    TaskRecord,
    WorkerStats,
    efficiency_report,
    master_worker_solve,
    static_partition_solve,
)
from .partition import (
    WEAK,
    Admissibility,
    BlockStructure,
    ClusterTree,
    build_tree,
    classify,
    flat_structure,
    strong,
)
from .spectrum import (
    EPS_EV_DEFAULT,
    EigenvalueEstimate,
    InertiaCache,
    ShiftAccuracyReport,
    default_interval,
    slice_range,
    slice_spectrum,
    verify_shift_accuracy,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    "Admissibility",
    "BasisSplit",
    "BlockStructure",
    "Breakdown",
    "ClusterTree",
    "ConfigError",
    "EPS_EV_DEFAULT",
    "EigenvalueEstimate",
    "GldlFactorization",
    "H2SliceError",
    "IncompleteSpectrum",
    "InertiaCache",
    "InertiaCount",
    "InertiaUnstable",
    "LaplaceKernel",
    "LdlResult",
    "NotInInterval",
    "OracleTooLarge",
    "ParallelResult",
    "PointCloud",
    "RankStructuredMatrix",
    "TaskRecord",
    "WorkerStats",
    "ShiftAccuracyReport",
    "ShiftHitEigenvalue",
    "WEAK",
    "build_tree",
    "classify",
    "construct",
    "default_interval",
    "efficiency_report",
    "eig_oracle",
    "flat_structure",
    "generalized_ldl",
    "generate_circle",
    "generate_grid",
    "gershgorin_interval",
    "inertia",
    "inertia_of",
    "laplace_kernel",
    "ldl_symmetric",
    "load_matrix_file",
    "load_point_cloud",
    "master_worker_solve",
    "reconstruct_dense",
    "rrqr_truncated",
    "save_matrix_file",
    "save_point_cloud",
    "sfc_order",
    "shift_diagonal",
    "slice_range",
    "slice_spectrum",
    "static_partition_solve",
    "strong",
    "verify_shift_accuracy",
]
