"""Exact Barycentric Fox-Neuwirth bicomplex computations."""

__version__ = "0.1.0"
