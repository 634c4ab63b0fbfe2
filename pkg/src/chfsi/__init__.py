"""Chebyshev filtered subspace iteration for correlated Hermitian sequences.

The package solves dense Hermitian (generalized) eigenproblems for the
lowest nev pairs and exploits eigenvector reuse across sequences of
slowly varying matrices. See chfsi.core for the solver, chfsi.sequence
for the sequence driver, chfsi.io for file formats and chfsi.cli for the
command-line front end.
"""

from .core import (
    FilterSpec,
    IterationStat,
    SolveReport,
    SolverConfig,
    back_transform,
    chebyshev_filter,
    chfsi_solve,
    lanczos_upper_bound,
    rayleigh_ritz,
    reduce_to_standard,
    residuals,
    solve_generalized,
)
from .errors import (
    BadMagic,
    ChfsiError,
    ConfigError,
    ContractViolation,
    DimensionMismatch,
    FilterDegenerate,
    MatrixFileError,
    NotConverged,
    NotPositiveDefinite,
    OracleNoConvergence,
    RankDeficient,
    SymmetryViolation,
    TruncatedPayload,
)
from .io import (
    DEFAULTS,
    RunConfig,
    config_hash,
    load_sequence,
    normalize_phase,
    parse_run_config,
    read_matrix,
    read_run_config,
    save_sequence,
    write_matrix,
)
from .linalg import (
    HermitianDenseMatrix,
    LowerTriangularFactor,
    VectorBlock,
    cholesky_factor,
    gemm,
    get_workers,
    householder_qr,
    oracle_eig,
    product_count,
    reset_product_count,
    set_workers,
    triangular_solve,
)
from .sequence import (
    ProblemSequence,
    SequenceReport,
    SequenceSpec,
    attach_work_ratios,
    generate_sequence,
    solve_sequence,
    vector_angles,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "ChfsiError", "ContractViolation", "DimensionMismatch",
    "NotPositiveDefinite", "RankDeficient", "OracleNoConvergence",
    "FilterDegenerate", "NotConverged", "MatrixFileError", "BadMagic",
    "TruncatedPayload", "SymmetryViolation", "ConfigError",
    # linalg
    "HermitianDenseMatrix", "VectorBlock", "LowerTriangularFactor",
    "gemm", "cholesky_factor", "householder_qr", "oracle_eig",
    "triangular_solve", "set_workers", "get_workers",
    "reset_product_count", "product_count",
    # core
    "FilterSpec", "SolverConfig", "SolveReport", "IterationStat",
    "reduce_to_standard", "back_transform", "lanczos_upper_bound",
    "chebyshev_filter", "rayleigh_ritz", "residuals", "chfsi_solve",
    "solve_generalized",
    # sequence
    "SequenceSpec", "ProblemSequence", "SequenceReport",
    "generate_sequence", "solve_sequence", "vector_angles",
    "attach_work_ratios",
    # io
    "DEFAULTS", "RunConfig", "read_matrix", "write_matrix",
    "normalize_phase", "parse_run_config", "read_run_config",
    "config_hash", "save_sequence", "load_sequence",
]
