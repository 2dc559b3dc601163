"""Specification-centric automated program repair engine."""

__version__ = "0.1.0"
