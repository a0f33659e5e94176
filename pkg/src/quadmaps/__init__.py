"""Uniform random plane quadrangulations: maps, bijections, schemes, metrics."""

__version__ = "0.1.0"
