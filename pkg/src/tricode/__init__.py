"""Measurement-only circuits of the perturbed toric code on a triangular lattice."""

__version__ = "0.1.0"
