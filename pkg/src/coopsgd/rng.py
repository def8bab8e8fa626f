"""Per-worker random streams.

Each worker owns a Philox stream keyed by ``(seed, worker)``. Streams never
share state, so the draws a worker sees at iteration ``k`` depend only on
``(seed, worker, k)`` no matter how the workers are scheduled.
"""

from __future__ import annotations

import numpy as np

__all__ = ["SEED_MASK", "worker_stream", "worker_streams", "aux_stream"]

SEED_MASK = (1 << 64) - 1

# Stream index reserved for estimators and data generation, disjoint from workers.
_AUX_WORKER = (1 << 63) - 1


def worker_stream(seed: int, worker: int) -> np.random.Generator:
    if worker < 0:
        raise ValueError(f"worker index must be >= 0, got {worker}")
    key = (int(seed) & SEED_MASK) | (int(worker) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def worker_streams(seed: int, count: int) -> list[np.random.Generator]:
    return [worker_stream(seed, i) for i in range(count)]


def aux_stream(seed: int, tag: int = 0) -> np.random.Generator:
    """Stream for non-worker randomness (synthetic data, Monte Carlo probes)."""
    return worker_stream(seed, _AUX_WORKER - tag)
