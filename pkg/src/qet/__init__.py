"""Quantum energy teleportation toolkit."""

__version__ = "0.1.0"
