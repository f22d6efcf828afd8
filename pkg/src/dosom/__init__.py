"""Density-of-states outer measures on lattices and trees."""

__version__ = "0.1.0"
