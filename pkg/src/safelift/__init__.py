"""Incremental unsafe-reduction pipeline for transpiled Rust crates."""

__version__ = "0.1.0"
