"""Exact diagonalization of hardcore bosons on the open sawtooth ladder."""

__version__ = "0.1.0"
