"""Variational-inequality solvers, cocoercivity certificates, and worst-case SDP assembly."""

__version__ = "0.1.0"
