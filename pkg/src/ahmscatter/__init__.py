"""Geodesic scattering on asymptotically hyperbolic manifolds.

Sojourn times, the scattering relation through rescaled Hamiltonian flows in
blow-up charts, and the regular part ``F = r + log rho_L + log rho_R`` of the
distance function, checked against the hyperbolic closed forms.
"""
from .charts import ChartConfig, ChartDomainError, blowdown_polar, blowup_polar, chart_transfer, lift, unlift
from .config import ConfigError, RunConfig, load_config
from .hamiltonian import PhasePoint, ProductPhasePoint, energy_p, field_HQ, field_Hp, symbol_Q
from .hyperbolic import exact_distance, exact_F, exact_sojourn
from .integrate import IntegratorConfig, integrate
from .metric import DomainError, MetricModel, dual_norm_sq, h_eval, validate_metric
from .rescaled import rescaled_field, rescaled_symbol
from .scattering import (DistanceResult, GridSpec, ScatteringDatum, ShootingConfig, distance_shooting,
                         F_value, scan_F, scattering_datum, sojourn_forward)
from .tracing import FlowResult, TracingError, trace_geodesic, trace_to_face

__version__ = "0.1.0"

__all__ = [
    "ChartConfig", "ChartDomainError", "blowdown_polar", "blowup_polar", "chart_transfer", "lift", "unlift",
    "ConfigError", "RunConfig", "load_config",
    "PhasePoint", "ProductPhasePoint", "energy_p", "field_HQ", "field_Hp", "symbol_Q",
    "exact_distance", "exact_F", "exact_sojourn",
    "IntegratorConfig", "integrate",
    "DomainError", "MetricModel", "dual_norm_sq", "h_eval", "validate_metric",
    "rescaled_field", "rescaled_symbol",
    "DistanceResult", "GridSpec", "ScatteringDatum", "ShootingConfig", "distance_shooting", "F_value",
    "scan_F", "scattering_datum", "sojourn_forward",
    "FlowResult", "TracingError", "trace_geodesic", "trace_to_face",
]
