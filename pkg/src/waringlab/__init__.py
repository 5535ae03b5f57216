"""Computational laboratory for the asymptotic formula in Waring's problem."""

__version__ = "0.1.0"
