"""Output formatting utilities for pagrad CLI."""

import json
from typing import Any, Dict, List, Optional

from tabulate import tabulate


def format_table(data: List[Dict[str, Any]], headers: Optional[List[str]] = None,
                 table_format: str = "grid") -> str:
    """Format data as a table."""
    if not data:
        return "No data to display"

    if headers is None:
        headers = list(data[0].keys()) if data else []

    rows = []
    for item in data:
        row = [format_value(item.get(header, "")) for header in headers]
        rows.append(row)

    return tabulate(rows, headers=headers, tablefmt=table_format)


def format_json(data: Any, indent: int = 2) -> str:
    """Format data as JSON."""
    return json.dumps(data, indent=indent, default=str)


def format_value(value: Any) -> str:
    """Render report numbers compactly; absent values become '-'."""
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def format_metrics_summary(entry: Dict[str, Any]) -> str:
    """One-line summary of a region's CV metrics."""
    cv = entry["cv"]
    return (f"acc={format_value(cv['mean_accuracy'])} f1={format_value(cv['mean_f1'])} "
            f"auroc={format_value(cv['mean_auroc'])}")
