"""Runtime configuration knobs."""

import os

DEFAULT_MAX_DIMENSION = 4096

# Environment override for the total-dimension cap enforced by constructors
# and tensor products.
ENV_MAX_DIMENSION = "SCHMIDT_LAB_MAX_DIM"


def max_total_dimension() -> int:
    """Largest total Hilbert-space dimension any operation will touch."""
    raw = os.environ.get(ENV_MAX_DIMENSION)
    if raw is None:
        return DEFAULT_MAX_DIMENSION
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(
            f"{ENV_MAX_DIMENSION} must be a positive integer, got {raw!r}"
        ) from exc
    if value < 1:
        raise ValueError(f"{ENV_MAX_DIMENSION} must be positive, got {value}")
    return value
