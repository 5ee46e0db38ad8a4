"""Linear-optical variational eigensolver with classical Hamiltonian transforms."""

__version__ = "0.1.0"
