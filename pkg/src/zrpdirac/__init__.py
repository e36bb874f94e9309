"""Dirac particle bound by a set of zero-range (point) interactions."""

__version__ = "0.1.0"
