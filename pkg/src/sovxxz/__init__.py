"""Quantum separation of variables for the open spin-1/2 XXZ chain."""

__version__ = "0.1.0"
