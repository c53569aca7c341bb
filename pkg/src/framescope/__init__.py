"""Corpus analysis pipeline for war/peace journalism framing indicators."""

__version__ = "0.1.0"
