"""Recursively defined quantum circuits: language, interpreter, proof kernel."""

__version__ = "0.1.0"
