"""Intersecting families of generalised permutations, checked exhaustively."""

__version__ = "0.1.0"
