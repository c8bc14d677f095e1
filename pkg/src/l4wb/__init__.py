"""Numerical workbench for averages of L^4-norms of holomorphic Hecke cusp forms."""

__version__ = "0.1.0"
