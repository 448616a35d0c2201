"""Colorings of quadrilateral substitution complexes and their determinism checks."""

__version__ = "0.1.0"
