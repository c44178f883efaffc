"""Symbolic-numeric toolkit for symmetries and first integrals of canonical
Hamiltonian systems."""

from .registry import EXAMPLES, load_example

__version__ = "0.1.0"

__all__ = ["EXAMPLES", "load_example", "__version__"]
