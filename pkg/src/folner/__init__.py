"""Invariant averaging over amenable group actions."""

__version__ = "0.1.0"
