"""Spectral and algebraic analysis of quantum channels in Kraus form."""

__version__ = "0.1.0"
