"""Quantum Fisher information for Hamiltonians with a conserved ``V``."""
__version__ = "0.1.0"
