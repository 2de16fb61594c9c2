"""Counter-based random streams for reproducible parallel simulation.

Every consumer of randomness gets a Philox stream keyed by
``(seed, purpose << PURPOSE_SHIFT | chunk_index)``.  Streams depend only on
the seed and on fixed integer labels, never on worker count or scheduling,
so any statistic assembled in chunk order is bit-identical across thread
counts.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

# Paths are simulated in fixed-size chunks; the chunk grid is part of the
# deterministic contract and must not depend on thread count.
CHUNK_SIZE = 1 << 15

PURPOSE_SHIFT = 40

# Stream namespaces, one per independent consumer of randomness.
PURPOSE_SIMULATE = 0
PURPOSE_A0 = 1
PURPOSE_Q_MARTINGALE = 2
PURPOSE_ARBITRAGE = 3
PURPOSE_STRICT_LM = 4
PURPOSE_DEFLATED = 5
PURPOSE_REJECTION = 6
PURPOSE_HEDGE = 7


def substream(seed: int, purpose: int, index: int) -> np.random.Generator:
    """Independent generator for one (purpose, chunk) cell of the stream grid."""
    key = np.array([seed, (purpose << PURPOSE_SHIFT) | index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def chunk_sizes(n: int, chunk_size: int = CHUNK_SIZE):
    """Yield (chunk_index, size) pairs covering n paths."""
    index = 0
    remaining = n
    while remaining > 0:
        size = min(chunk_size, remaining)
        yield index, size
        index += 1
        remaining -= size


def map_chunks(fn, n: int, threads: int = 1, chunk_size: int = CHUNK_SIZE) -> list:
    """Run ``fn(chunk_index, size)`` over every chunk and return results in
    chunk order.

    The worker count affects scheduling only; results are identical for any
    ``threads`` because each chunk owns its substream and the output list is
    ordered by chunk index.
    """
    chunks = list(chunk_sizes(n, chunk_size))
    if threads <= 1 or len(chunks) <= 1:
        return [fn(i, size) for i, size in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, i, size) for i, size in chunks]
        return [f.result() for f in futures]
