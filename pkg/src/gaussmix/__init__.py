"""Gaussian measures, eigenvector fields and mixing diagnostics for linear operators."""

__version__ = "0.1.0"
