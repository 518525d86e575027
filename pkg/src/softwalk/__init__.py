"""Compliant-terrain contact modeling, estimation, and whole-body control."""

__version__ = "0.1.0"
