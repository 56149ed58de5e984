"""Statevector simulation of amplitude-estimation cross-correlation and EMML."""

__version__ = "0.1.0"
