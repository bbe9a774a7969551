"""Worker-count controller that derives capacity from resource usage."""
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import psutil

from fitgrowth_core.config import get_config

logger = logging.getLogger(__name__)


class ConcurrencyController:
    """Calculates and caches the recommended number of worker threads."""

    CACHE_TTL_SECONDS = 10
    MAX_WORKERS_CAP = 32

    def __init__(self):
        self._cached_max: Optional[int] = None
        self._last_refresh: float = 0.0

    def get_max_workers(self, force_recalc: bool = False) -> int:
        """Return the worker count suggested by config or available resources."""
        now = time.time()
        if (
            force_recalc
            or self._cached_max is None
            or (now - self._last_refresh) >= self.CACHE_TTL_SECONDS
        ):
            self._cached_max = max(1, self._compute())
            self._last_refresh = now
        return self._cached_max

    def _compute(self) -> int:
        system = get_config().system
        if system.max_workers != "auto":
            return int(system.max_workers)

        cpu_count = psutil.cpu_count(logical=True) or os.cpu_count() or 1
        available_mb = psutil.virtual_memory().available / (1024 * 1024)
        memory_based = int(available_mb / max(1, system.memory_per_worker_mb))
        workers = min(cpu_count, memory_based, self.MAX_WORKERS_CAP)
        logger.debug(
            f"Auto worker sizing: cpu={cpu_count}, available_mb={available_mb:.0f}, workers={workers}"
        )
        return workers

    def executor(self, max_workers: Optional[int] = None) -> ThreadPoolExecutor:
        """Create a thread pool sized by the controller unless overridden."""
        return ThreadPoolExecutor(max_workers=max_workers or self.get_max_workers())


_controller: Optional[ConcurrencyController] = None


def get_concurrency_controller() -> ConcurrencyController:
    """Return singleton controller instance."""
    global _controller
    if _controller is None:
        _controller = ConcurrencyController()
    return _controller
