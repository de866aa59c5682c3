"""Capacity moments, dispersion and reliability of correlated kappa-mu shadowed MRC channels."""

from .channel import ChannelConfig, derive_params, delta_coefficients, Variant
from .statistics import (
    CapacityStats,
    Method,
    capacity_stats,
    chos_approx,
    chos_direct,
    chos_exact,
    make_context,
    mgf,
    pdf,
)

__all__ = [
    "ChannelConfig", "derive_params", "delta_coefficients", "Variant", "CapacityStats",
    "Method", "capacity_stats", "chos_approx", "chos_direct", "chos_exact", "make_context",
    "mgf", "pdf",
]
