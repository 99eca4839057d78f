"""Spectral flow of closed semi-Riemannian geodesics and their iterates."""

__version__ = "0.1.0"
