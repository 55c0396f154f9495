"""Genus-one Birkhoff sections for geodesic flows on small hyperbolic
2-orbifolds: explicit construction and machine verification."""

__version__ = "0.1.0"
