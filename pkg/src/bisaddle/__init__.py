"""Solvers and a certification harness for bilinear saddle-point problems.

Objectives have the form ``min_x max_y g(x) + <x, A y> - h(y)`` with
smooth strongly convex quadratic ``g`` and ``h``.  The package provides
the exact and inexact first-order solvers for this class, oracle-call
accounting, and runtime monitors that certify each method's convergence
bound against the exactly computable saddle point.
"""

from .catalyst import (
    CatalystAcceleratedPrimalDual,
    CatalystParams,
    CatalystSplitProximalPoint,
    catalyst_envelope,
    catalyst_params,
    rescale_envelope,
    swap_roles,
)
from .certify import (
    PropertyReport,
    check_prox_nonexpansive,
    check_smooth_strong,
    check_smoothness_equivalences,
    gradient_fd_check,
    monitor_bound,
    monitors_for,
)
from .errors import (
    BadC0,
    BadOrdering,
    BadSpectrum,
    BisaddleError,
    ConfigError,
    DimensionMismatch,
    MissingField,
    NonFinite,
    NotRescaled,
    NotSPD,
    SingularSystem,
    Unbalanced,
)
from .linalg import (
    random_coupling,
    random_spd_with_spectrum,
    solve_spd,
    spectral_norm,
)
from .problem import (
    CouplingOperator,
    OracleTally,
    QuadraticFunction,
    SaddleProblem,
    SaddleReference,
    couple,
    gradient,
    is_eps_saddle,
    problem_from_spec,
    problem_spec_to_json,
    reference_saddle,
    rescale_to_equal_smoothness,
)
from .prox import prox_quadratic, prox_separable, prox_skew
from .solvers import (
    AcceleratedGradient,
    AcceleratedPrimalDual,
    InexactAcceleratedPrimalDual,
    InexactSplitProximalPoint,
    RunTrace,
    SplitProximalPoint,
    accel_fb_constants,
    accel_fb_tolerance,
    agd_steps_for,
    inexact_prox_inner_counts,
    inexact_prox_tolerances,
)

__version__ = "0.1.0"

__all__ = [
    "AcceleratedGradient",
    "AcceleratedPrimalDual",
    "BadC0",
    "BadOrdering",
    "BadSpectrum",
    "BisaddleError",
    "CatalystAcceleratedPrimalDual",
    "CatalystParams",
    "CatalystSplitProximalPoint",
    "ConfigError",
    "CouplingOperator",
    "DimensionMismatch",
    "InexactAcceleratedPrimalDual",
    "InexactSplitProximalPoint",
    "MissingField",
    "NonFinite",
    "NotRescaled",
    "NotSPD",
    "OracleTally",
    "PropertyReport",
    "QuadraticFunction",
    "RunTrace",
    "SaddleProblem",
    "SaddleReference",
    "SingularSystem",
    "Unbalanced",
    "accel_fb_constants",
    "accel_fb_tolerance",
    "agd_steps_for",
    "catalyst_envelope",
    "catalyst_params",
    "check_prox_nonexpansive",
    "check_smooth_strong",
    "check_smoothness_equivalences",
    "couple",
    "gradient",
    "gradient_fd_check",
    "inexact_prox_inner_counts",
    "inexact_prox_tolerances",
    "is_eps_saddle",
    "monitor_bound",
    "monitors_for",
    "problem_from_spec",
    "problem_spec_to_json",
    "prox_quadratic",
    "prox_separable",
    "prox_skew",
    "random_coupling",
    "random_spd_with_spectrum",
    "reference_saddle",
    "rescale_envelope",
    "rescale_to_equal_smoothness",
    "solve_spd",
    "spectral_norm",
    "swap_roles",
]
