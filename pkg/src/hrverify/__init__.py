"""Numerical verification of Hardy-Rellich type identities in radial form."""

__version__ = "0.1.0"
