"""Vietoris-Rips complexes, Euclidean shadows, homology towers, and
curve reconstruction from noisy samples."""

__version__ = "0.1.0"
