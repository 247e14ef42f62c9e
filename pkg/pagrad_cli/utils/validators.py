"""Input validation utilities for pagrad CLI."""

from pathlib import Path
from typing import Tuple

from ..exceptions import ValidationError


def validate_dims(text: str) -> Tuple[int, int, int]:
    """Parse ROI dims given as ``dx,dy,dz`` (``x`` also accepted as separator)."""
    parts = text.replace("x", ",").split(",")
    if len(parts) != 3:
        raise ValidationError(f"Invalid dims '{text}'. Use dx,dy,dz", code="BAD_DIMS")
    try:
        dims = tuple(int(p.strip()) for p in parts)
    except ValueError:
        raise ValidationError(f"Invalid dims '{text}'. Dims must be integers", code="BAD_DIMS")

    if any(d < 1 for d in dims):
        raise ValidationError("Dims must be positive integers", code="BAD_DIMS")

    return dims  # type: ignore[return-value]


def validate_existing_file(path: str, what: str) -> Path:
    """Ensure an input file exists."""
    resolved = Path(path)
    if not resolved.is_file():
        raise ValidationError(f"{what} not found: {path}", code="FILE_NOT_FOUND")
    return resolved


def validate_repeats(repeats: int, max_repeats: int = 1000) -> bool:
    """Validate permutation repeat count."""
    if repeats < 1:
        raise ValidationError("Repeats must be a positive integer", code="BAD_REPEATS")

    if repeats > max_repeats:
        raise ValidationError(f"Repeats cannot exceed {max_repeats}", code="BAD_REPEATS")

    return True
