"""Shared helpers: logging, configuration, output files."""
