"""Exact Cohn localization, chain complexes and L-theory invariants."""

__version__ = "0.1.0"

from .server import run

__all__ = ["__version__", "run"]
