"""Finite sequential procedures over truncated flat domains."""

__version__ = "0.1.0"
