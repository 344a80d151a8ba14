"""Billiard bodies, vertical ray tracing and resistance evaluation."""

from .geometry import (Body2D, GeneratorCurve, ParabolicArc, Segment, flat_top_body,
                       polyline_body)
from .hull import (ConvexProfile, convex_hull, is_convex, modified_resistance,
                   profile_body, triangle_body)
from .quadrature import QuadratureSpec, ResistanceResult, resistance
from .trace import BACKEND, TraceResult, reflect, trace, trace_many

__all__ = [
    "BACKEND", "Body2D", "ConvexProfile", "GeneratorCurve", "ParabolicArc",
    "QuadratureSpec", "ResistanceResult", "Segment", "TraceResult", "convex_hull",
    "flat_top_body", "is_convex", "modified_resistance", "polyline_body",
    "profile_body", "reflect", "resistance", "trace", "trace_many", "triangle_body",
]
