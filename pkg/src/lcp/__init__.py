"""Lexical complexity prediction pipeline: handcrafted features, boosted-tree
regression, prediction ensembling, and attention analysis."""

__version__ = "0.1.0"
