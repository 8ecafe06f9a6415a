#!/usr/bin/env python3
# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Environment information extraction."""

import logging
import os

logger = logging.getLogger(__name__)

THREADS_VAR = "BOSE2D_THREADS"
LOG_LEVEL_VAR = "BOSE2D_LOG_LEVEL"


def get_worker_count(default: int = 0) -> int:
    """Get the number of worker processes for sweeps.

    BOSE2D_THREADS overrides the default. A value of 0 means one worker per CPU.

    Args:
        default: Worker count used when the variable is unset or invalid.

    Returns:
        A positive worker count.
    """
    env = os.environ.copy()
    threads = env.get(THREADS_VAR)

    count = default
    if threads:
        try:
            count = int(threads)
        except ValueError:
            logger.warning("Ignoring invalid %s value %r", THREADS_VAR, threads)
        else:
            if count < 0:
                logger.warning("Ignoring negative %s value %d", THREADS_VAR, count)
                count = default

    if count <= 0:
        return os.cpu_count() or 1

    return count


def get_log_level() -> str:
    """Get the log level requested through the environment if available.

    Returns:
        The upper-cased level name or an empty string if it does not exist.
    """
    env = os.environ.copy()
    level = env.get(LOG_LEVEL_VAR)

    if level:
        return level.upper()

    return ""
