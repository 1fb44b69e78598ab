"""Numerical p-modulus, majorant-field criteria and mapping experiments."""
from . import bounds, fields, geometry, mappings, modsolver
from .geometry import Condenser, DimensionParams, ExtendedPoint, SphericalRing, chordal_distance
from .modsolver import CurveFamily, DensityGrid, Polyline, discrete_modulus, sample_ring_family

__version__ = "0.1.0"
__all__ = [
    "bounds", "fields", "geometry", "mappings", "modsolver", "Condenser", "DimensionParams",
    "ExtendedPoint", "SphericalRing", "chordal_distance", "CurveFamily", "DensityGrid", "Polyline",
    "discrete_modulus", "sample_ring_family",
]
