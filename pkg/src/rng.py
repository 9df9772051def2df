"""
Counter-based random streams and the replicate worker pool.

Every replicate draws from its own Philox stream keyed by (seed, replicate),
so results never depend on how replicates are scheduled across threads.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

from src.config import THREADS_ENV
from src.errors import ConfigError

T = TypeVar("T")

_SEED_MAX = 2**64 - 1
DEFAULT_CHUNK = 64


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= _SEED_MAX:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream(seed: int, *path: int) -> np.random.Generator:
    """Philox generator addressed by (seed, *path), e.g. (seed, replicate)."""
    seq = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(p) for p in path))
    key = seq.generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else $SPDE_LAB_THREADS, else 1."""
    if threads is None:
        raw = os.getenv(THREADS_ENV)
        if not raw:
            return 1
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    return threads


def replicate_chunks(count: int, chunk_size: int = DEFAULT_CHUNK) -> list[np.ndarray]:
    return [np.arange(s, min(s + chunk_size, count)) for s in range(0, count, chunk_size)]


def run_replicates(work: Callable[[np.ndarray], T], count: int, threads: int = 1,
                   chunk_size: int = DEFAULT_CHUNK) -> list[T]:
    """Apply `work` to contiguous replicate-index chunks, results in index order.

    Chunk boundaries depend only on `count` and `chunk_size`, never on the
    thread count.
    """
    chunks = replicate_chunks(count, chunk_size)
    if threads <= 1 or len(chunks) <= 1:
        return [work(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, chunks))


def derive_seed(seed: int, *path: int) -> int:
    """An independent 64-bit seed addressed by (seed, *path)."""
    seq = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(p) for p in path))
    return int(seq.generate_state(1, dtype=np.uint64)[0])
