"""Numerical laboratory for the fractional Laplacian on the unit ball."""

__version__ = "0.1.0"
