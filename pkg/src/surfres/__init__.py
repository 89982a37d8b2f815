"""Exact characteristic polyhedra and resolution invariants for surfaces."""

__version__ = "0.1.0"
