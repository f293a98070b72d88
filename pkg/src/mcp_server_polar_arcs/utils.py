"""
Process and execution helpers for the polar arcs server and CLI.
"""

import logging
import os
import signal
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

# Configure logging
logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Sequence[T], threads: Optional[int] = 1) -> List[R]:
    """
    Apply ``fn`` to every item, preserving order.

    Args:
        fn: Function of one item
        items: Inputs
        threads: Worker pool size; 1 (or None) runs inline

    Returns:
        Results in input order
    """
    items = list(items)
    if not threads or threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    workers = min(threads, len(items))
    logger.debug(f"Running {len(items)} jobs on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def setup_resilient_process():
    """
    Install graceful shutdown handlers for the long-running MCP server.

    SIGINT and SIGTERM exit with status 0, and stdout/stderr are switched to
    line buffering so tool responses are flushed promptly.

    Returns:
        The original sys.exit function
    """
    original_exit = sys.exit

    def handle_signal(sig, frame):
        logger.info(f"Received signal {sig}, shutting down polar arcs server")
        original_exit(0)

    signal.signal(signal.SIGINT, handle_signal)
    signal.signal(signal.SIGTERM, handle_signal)

    os.environ["PYTHONUNBUFFERED"] = "1"
    try:
        sys.stdout.reconfigure(line_buffering=True)
        sys.stderr.reconfigure(line_buffering=True)
    except (AttributeError, ValueError) as e:
        logger.warning(f"Could not set line-buffered I/O: {e}")

    return original_exit
