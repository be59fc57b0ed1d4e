"""Gabor wave front sets, Hamiltonian flows and Schrodinger propagators."""
__version__ = "0.1.0"
