"""Geometrothermodynamics toolkit.

Builds the Legendre-invariant metric of a thermodynamic system from its
fundamental equation, computes curvature on the space of equilibrium states,
and locates the singularities that mark stability limits and phase
transitions. Includes the contact phase-space machinery (Gibbs 1-form,
Legendre transformations, Euler/Gibbs-Duhem identities) and scan/fit tools.
"""

from .analysis import (
    Axis,
    DivergenceFit,
    GridSpec,
    ScanReport,
    SingularPoint,
    find_singular_locus,
    fit_divergence_exponent,
    fit_power_law,
    geometric_offsets,
    grid_scan,
    rn_critical_points,
)
from .errors import DegenerateMetricError, DomainError, GtdError, ParseError
from .fundeq import (
    BUILTIN_NAMES,
    SystemSpec,
    builtin,
    evaluate,
    hessian,
    intensive_variables,
    load_system_file,
    parse,
    potential_value,
    stability_residual_vdw,
    to_source,
)
from .geometry import (
    CLOSED_FORM_NAMES,
    CurvatureReport,
    DirectMetricField,
    HessianMetricField,
    MetricKind,
    MetricValue,
    christoffel,
    closed_form_metric,
    hessian_positive_semidefinite,
    load_metric_file,
    metric_at,
    metric_determinant,
    scalar_curvature,
    sphere_metric,
)
from .jets import Jet, constant, extract_partial, seed_point, seed_variable
from .phase_space import (
    LegendreMap,
    PhaseMetricValue,
    PhasePoint,
    contact_volume_coefficient,
    contact_volume_expected,
    euler_residual,
    gibbs_duhem_residual,
    legendre_apply,
    legendre_invariance_residual,
    lift_point,
    phase_metric_at,
    theta_residual,
)

__version__ = "0.1.0"

__all__ = [
    "Axis",
    "BUILTIN_NAMES",
    "CLOSED_FORM_NAMES",
    "CurvatureReport",
    "DegenerateMetricError",
    "DirectMetricField",
    "DivergenceFit",
    "DomainError",
    "GridSpec",
    "GtdError",
    "HessianMetricField",
    "Jet",
    "LegendreMap",
    "MetricKind",
    "MetricValue",
    "ParseError",
    "PhaseMetricValue",
    "PhasePoint",
    "ScanReport",
    "SingularPoint",
    "SystemSpec",
    "builtin",
    "christoffel",
    "closed_form_metric",
    "constant",
    "contact_volume_coefficient",
    "contact_volume_expected",
    "euler_residual",
    "evaluate",
    "extract_partial",
    "find_singular_locus",
    "fit_divergence_exponent",
    "fit_power_law",
    "geometric_offsets",
    "gibbs_duhem_residual",
    "grid_scan",
    "hessian",
    "hessian_positive_semidefinite",
    "intensive_variables",
    "legendre_apply",
    "legendre_invariance_residual",
    "lift_point",
    "load_metric_file",
    "load_system_file",
    "metric_at",
    "metric_determinant",
    "parse",
    "phase_metric_at",
    "potential_value",
    "rn_critical_points",
    "scalar_curvature",
    "seed_point",
    "seed_variable",
    "sphere_metric",
    "stability_residual_vdw",
    "theta_residual",
    "to_source",
]
