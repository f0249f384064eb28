"""Audit AI-generated-image detection corpora for compression and size
bias, build debiased splits, and evaluate detector predictions."""

__version__ = "0.1.0"
