"""
Providers for the command handlers.

Typer has no dependency injection, so handlers call these functions
directly; cached providers are created once per process.
"""

from functools import lru_cache
from typing import Optional

from .facade import EllipGenFacade
from ...dependencies import get_worker_count


@lru_cache
def get_facade() -> EllipGenFacade:
    """
    Get the cached facade, bounded by ELLIPGEN_THREADS workers.

    Returns:
        EllipGenFacade instance.
    """
    return EllipGenFacade(workers=get_worker_count())


def get_experiment_facade(workers: Optional[int] = None) -> EllipGenFacade:
    """
    Facade for one experiment run.

    Args:
        workers: Requested worker processes; capped by ELLIPGEN_THREADS.
    """
    if workers is None:
        return get_facade()
    return EllipGenFacade(workers=min(workers, get_worker_count()))
