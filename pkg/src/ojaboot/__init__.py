"""Streaming PCA with Oja's algorithm, multiplier-bootstrap error quantification,
and the weighted chi-square reference law of the scaled sin^2 error."""

__version__ = "0.1.0"
