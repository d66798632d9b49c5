"""Constraint-system games: classical structure, gadgets and synchronous quantum defects."""

__version__ = "0.1.0"
