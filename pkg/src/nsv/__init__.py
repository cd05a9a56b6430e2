"""Spectral Galerkin toolkit for the 3D Navier-Stokes-Voigt equations."""

from .spectral import (
    DomainSpec,
    SpectralField,
    bilinear,
    eigenvalue_table,
    g_apply,
    inner,
    leray_project,
    load_field,
    norm,
    random_field,
    save_field,
    single_mode,
    stokes_apply,
    taylor_green,
    trilinear,
)
from .dynamics import (
    StateRecord,
    Trajectory,
    TrajectoryConfig,
    VoigtParams,
    continuous_dependence_probe,
    derivative_norm_sup,
    energy_identity_residual,
    evolve,
    rhs,
    solve_L_decomposition,
    solve_V_decomposition,
    step,
)
from .attractor import (
    BoundsReport,
    TangentBundle,
    TraceStats,
    canonical_tangent_bundle,
    compute_bounds,
    covering_number_estimate,
    dim_bound_formula,
    dim_comparison_check,
    ellipsoid_covering_log2,
    evolve_tangents,
    hatted_rhs,
    linearized_apply,
    random_tangent_bundle,
)
from .limit import (
    CloudDistance,
    FamilyRun,
    absorbing_nesting_check,
    cloud_semidistance,
    energy_inequality_residual,
    run_family,
    weak_distance,
)
from .config import RunConfig, generate_forcing, generate_initial, load_config
from .errors import (
    CapacityError,
    ConfigError,
    DivergenceError,
    DomainMismatchError,
    InvalidFieldError,
    UnsupportedAlphaError,
)

__version__ = "0.1.0"
