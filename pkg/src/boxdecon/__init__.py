"""Exact sparse deconvolution with a box kernel.

The package covers the box-convolution operators and their kernel
(:mod:`~boxdecon.boxconv`), a dense LP solver (:mod:`~boxdecon.lpsolve`),
l1 / l0 / sparse-derivative recovery with uniqueness checks
(:mod:`~boxdecon.recovery`), pixel-shift scanning with TV reconstruction
(:mod:`~boxdecon.imaging2d`), and scikit-learn style wrappers
(:mod:`~boxdecon.estimators`).
"""

__version__ = "0.1.0"

from .boxconv import (
    BoxOperator,
    KernelBasis,
    Mode,
    adjoint_apply2d,
    apply2d,
    in_kernel,
    kernel_basis,
)
from .exceptions import (
    BoxDeconError,
    CapacityError,
    DimensionError,
    InfeasibleError,
    NumericalError,
    PreconditionError,
    SolverError,
)
from .imaging2d import (
    GradientField,
    ScanConfig,
    TvConfig,
    TvResult,
    divergence,
    gradient,
    psnr,
    simulate_scan,
    tv_reconstruct,
)
from .lpsolve import LinearProgram, SolveReport, SolverConfig, Status, solve_lp
from .recovery import (
    RecoveryConfig,
    RecoveryResult,
    Verdict,
    basis_pursuit,
    detect_tie,
    l0_oracle,
    nullspace_property_check,
    sparse_derivative_recover,
    tightness_pair,
)
from .estimators import BoxConvolution, BoxDeconvolver, TVSuperResolver

__all__ = [
    "BoxOperator", "KernelBasis", "Mode", "apply2d", "adjoint_apply2d", "in_kernel", "kernel_basis",
    "BoxDeconError", "CapacityError", "DimensionError", "InfeasibleError", "NumericalError",
    "PreconditionError", "SolverError",
    "GradientField", "ScanConfig", "TvConfig", "TvResult", "divergence", "gradient", "psnr",
    "simulate_scan", "tv_reconstruct",
    "LinearProgram", "SolveReport", "SolverConfig", "Status", "solve_lp",
    "RecoveryConfig", "RecoveryResult", "Verdict", "basis_pursuit", "detect_tie", "l0_oracle",
    "nullspace_property_check", "sparse_derivative_recover", "tightness_pair",
    "BoxConvolution", "BoxDeconvolver", "TVSuperResolver",
]
