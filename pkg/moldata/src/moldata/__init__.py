"""Offline generator for the bundled molecular Hamiltonian files."""

__version__ = "0.1.0"
