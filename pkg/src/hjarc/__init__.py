"""Arcs in projective and affine Hjelmslev planes over finite chain rings."""

__version__ = "0.1.0"
