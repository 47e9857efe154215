"""Robust Data-to-Born transformation for active-array wave data."""

__version__ = "0.1.0"
