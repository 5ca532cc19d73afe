"""Corpus homogeneity measurement and collapse-forecast pipeline."""

__version__ = "0.1.0"
