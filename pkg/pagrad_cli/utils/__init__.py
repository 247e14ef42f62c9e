"""Utilities for pagrad CLI."""

from .formatters import format_json, format_metrics_summary, format_table, format_value
from .validators import validate_dims, validate_existing_file, validate_repeats

__all__ = [
    "format_table",
    "format_json",
    "format_value",
    "format_metrics_summary",
    "validate_dims",
    "validate_existing_file",
    "validate_repeats",
]
