"""Axisymmetric Einstein-wave-Klein-Gordon solver with null-chart diagnostics."""
__version__ = "0.1.0"
