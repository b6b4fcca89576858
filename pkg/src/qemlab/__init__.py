"""Quasi-probability error mitigation in the Pauli transfer matrix picture."""

__version__ = "0.1.0"
