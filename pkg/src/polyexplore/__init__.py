"""Planar exploration simulator built around edge-labeled polygon maps."""

__version__ = "0.1.0"
