"""Discrete integrable kernels as squares of Hankel matrices, with finite-section verification."""

__version__ = "0.1.0"
