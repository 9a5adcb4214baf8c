"""Transformer-based complexity regressor with file-format exports."""

__version__ = "0.1.0"
