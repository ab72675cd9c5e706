# functionals/parallel.py
"""
Parallel evaluation engine for parameter ladders.

Every sample of a ladder is an independent, pure evaluation. The engine runs
them in a thread pool (numpy and scipy release the GIL in the heavy parts) and
collects them with asyncio.gather, which keeps results in submission order so
the merged ladder is deterministic whatever the worker count.
"""

import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, List, Sequence

logger = logging.getLogger("heatperim")


class ParallelLadderEngine:
    """
    Runs one callable over many parameters concurrently and returns the values
    in parameter order.
    """

    def __init__(self, workers: int = 1):
        """
        Args:
            workers: Maximum number of concurrent evaluations (default: 1)
        """
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        self.workers = workers

    async def evaluate(self, fn: Callable[[Any], Any], params: Sequence[Any], tag: str = "ladder") -> List[Any]:
        """
        Evaluate fn on every parameter and merge the results by parameter order.

        Args:
            fn: Pure callable evaluated once per parameter
            params: Parameters, in the order results must come back
            tag: Name used in log lines

        Returns:
            List of fn(param) in the order of params
        """
        logger.info(f"[PARALLEL] {tag}: {len(params)} evaluation(s) on {self.workers} worker(s)")

        loop = asyncio.get_running_loop()
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            tasks = [
                self._run_one(loop, pool, fn, p, idx, tag)
                for idx, p in enumerate(params)
            ]
            results = await asyncio.gather(*tasks, return_exceptions=False)

        logger.info(f"[PARALLEL] {tag}: completed {len(results)} evaluation(s)")
        return list(results)

    def run(self, fn: Callable[[Any], Any], params: Sequence[Any], tag: str = "ladder") -> List[Any]:
        """
        Synchronous entry point; serial when a single worker is configured.

        Inside an already running event loop (a notebook, an async caller)
        asyncio.run is unavailable, so the pool is driven with Executor.map,
        which also returns results in parameter order.
        """
        if self.workers == 1 or len(params) <= 1:
            return [fn(p) for p in params]
        try:
            asyncio.get_running_loop()
        except RuntimeError:
            return asyncio.run(self.evaluate(fn, params, tag))

        logger.info(f"[PARALLEL] {tag}: event loop already running, using the pool directly")
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, params))

    async def _run_one(self, loop, pool, fn, param, idx: int, tag: str):
        """Run a single evaluation in the executor to avoid blocking the loop."""
        logger.debug(f"[PARALLEL] {tag}: sample {idx} param={param}")
        return await loop.run_in_executor(pool, fn, param)
