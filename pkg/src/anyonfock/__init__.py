"""Anyon Fock-space engine: Q-symmetric Fock spaces, quasi-free states,
renormalized density moments and the matching random-measure laws."""

__version__ = "0.1.0"
