"""Geodesic flows of planar polynomial pseudo-Finsler metrics.

The metric function F(x, y; p) is a polynomial in the slope p = dy/dx
with smooth coefficient fields.  The package builds the projectivized
direction field of the geodesic equation, integrates and classifies it,
stratifies the plane by the discriminant, analyses singular points of
the flow, expands solutions in power series at degenerate points, and
renders phase portraits.  Product metrics induced on immersed surfaces
get dedicated blow-up tooling.

Heavy kernels are compiled with numba when it is importable; setting
the environment variable FINSLERFLOW_DISABLE_NUMBA forces the plain
numpy fallback.
"""

from __future__ import annotations

from .berwald_moor import (
    AdaptedLocalMetric,
    SurfaceImmersion,
    adapted_from_immersion,
    admissible_u,
    blowup_field_at,
    blowup_spectrum,
    bm_family_shoot,
    double_direction_locus,
    induced_metric,
)
from .expr import ScalarField, as_field, parse
from .flow import (
    GeodesicTrace,
    IntegratorConfig,
    PTMPoint,
    TraceEvent,
    arclength_reparam,
    field_at,
    integrate,
    isotropic_trace,
    shoot_boundary_family,
    tm_integrate,
)
from .metric import (
    ProjectiveRoot,
    PseudoFinslerMetric,
    Stratum,
    accel_determinants,
    classify_point,
    disc_denom,
    disc_metric,
    isotropic_directions,
    metric_from_strings,
)
from .polyanalysis import (
    CorrespondenceReport,
    RootedPolynomial,
    correspondence_report,
    degeneracy_poly,
    pairwise_expansion,
    spread_form,
)
from .puiseux import (
    GeodesicSeries,
    TruncatedSeries,
    series_point,
    series_to_curve,
    solve_geodesic_series,
)
from .singular import (
    CurveSamples,
    SingularPoint,
    StratumError,
    TangencyReport,
    classify_singular,
    find_tangency_failures,
    lift_to_slope,
    singular_curves,
    singular_directions,
    tangency_report,
    trace_implicit_curve,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptedLocalMetric",
    "CorrespondenceReport",
    "CurveSamples",
    "GeodesicSeries",
    "GeodesicTrace",
    "IntegratorConfig",
    "PTMPoint",
    "ProjectiveRoot",
    "PseudoFinslerMetric",
    "RootedPolynomial",
    "ScalarField",
    "SingularPoint",
    "Stratum",
    "StratumError",
    "SurfaceImmersion",
    "TangencyReport",
    "TraceEvent",
    "TruncatedSeries",
    "accel_determinants",
    "adapted_from_immersion",
    "admissible_u",
    "arclength_reparam",
    "as_field",
    "field_at",
    "blowup_field_at",
    "blowup_spectrum",
    "bm_family_shoot",
    "classify_point",
    "classify_singular",
    "correspondence_report",
    "degeneracy_poly",
    "disc_denom",
    "disc_metric",
    "double_direction_locus",
    "find_tangency_failures",
    "induced_metric",
    "integrate",
    "isotropic_directions",
    "isotropic_trace",
    "lift_to_slope",
    "metric_from_strings",
    "pairwise_expansion",
    "parse",
    "series_point",
    "series_to_curve",
    "shoot_boundary_family",
    "singular_curves",
    "singular_directions",
    "solve_geodesic_series",
    "spread_form",
    "tangency_report",
    "tm_integrate",
    "trace_implicit_curve",
]
