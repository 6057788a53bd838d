"""Runtime knobs shared across modules."""

import os

THREADS_ENV = "FILTERLAB_THREADS"


def worker_count(requested: int | None = None) -> int:
    """Worker budget for parallel sections, capped by FILTERLAB_THREADS."""
    cap = os.environ.get(THREADS_ENV)
    limit = max(1, int(cap)) if cap else (os.cpu_count() or 1)
    if requested is None:
        return limit
    return max(1, min(requested, limit))
