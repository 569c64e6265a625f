"""Hamiltonian Updates for SDP relaxations of QUBO, with rounding and quantum cost estimates."""

__version__ = "0.1.0"
