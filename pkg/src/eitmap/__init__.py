"""Fuzzy heart/lung mapping of gated EIT image sequences."""

__version__ = "0.1.0"
