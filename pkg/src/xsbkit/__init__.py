"""Numerical toolkit for Bourgain-space trilinear estimates and the 1D Dirac-Klein-Gordon system."""

__version__ = "0.1.0"
