import os
from functools import lru_cache


APP_ENV = os.getenv("APP_ENV", "prod")

ELLIPGEN_NA_TOKEN = os.getenv("ELLIPGEN_NA_TOKEN", "NA")
ELLIPGEN_THREADS = os.getenv("ELLIPGEN_THREADS", "1")

# Bumped whenever a default in internal/ellipgen/config.py changes
DEFAULTS_VERSION = "1"
PACKAGE_VERSION = "0.3.0"


@lru_cache
def get_worker_count() -> int:
    """
    Number of worker processes the experiment harness may use.

    Returns:
        ELLIPGEN_THREADS parsed as a positive integer (1 when unset or invalid).
    """
    try:
        workers = int(ELLIPGEN_THREADS)
    except ValueError:
        return 1

    return max(workers, 1)
