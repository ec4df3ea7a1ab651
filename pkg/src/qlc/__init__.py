"""Desk-scale numerics for N-copy compression of shallow-circuit states."""

__version__ = "0.1.0"
