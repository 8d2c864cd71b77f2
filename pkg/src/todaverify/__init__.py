"""Symbolic certification and numeric probing of quantum Toda intertwiners."""

__version__ = "0.1.0"
