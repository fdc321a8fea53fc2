"""Spectral solvers and random fields for fractional Cauchy problems on compact manifolds."""

__version__ = "0.1.0"
