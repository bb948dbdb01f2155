"""Decomposition based search for constraint problems."""

__version__ = "0.1.0"
