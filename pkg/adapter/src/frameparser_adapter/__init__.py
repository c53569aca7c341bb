"""Batch adapter: frame-semantic parser output -> occurrence JSONL."""

__version__ = "0.1.0"
