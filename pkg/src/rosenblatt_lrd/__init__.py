"""Rosenblatt-type limits of quadratic functionals of long-range dependent
Gaussian random fields on bounded domains."""

__version__ = "0.1.0"
