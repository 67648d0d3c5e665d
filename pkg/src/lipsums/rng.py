"""Counter-based random streams.

Every random quantity in the package is addressed by ``(seed, stream,
position)``: a Philox-4x64 generator keyed by ``(seed, stream)`` is jumped
directly to ``position``. Any chunking of a range of positions therefore
reproduces the serial stream bit for bit, whatever the number of workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

MASK64 = (1 << 64) - 1
# samples per chunk for chunked Monte Carlo; fixed so reductions never depend on workers
CHUNK = 4096

# stream identifiers
NOISE = 0
SEARCH = 1
CERT = 2
PAIRS = 3

T = TypeVar("T")


def raw64(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    """``count`` raw 64-bit words of stream ``(seed, stream)`` from ``start``."""
    if count <= 0:
        return np.empty(0, dtype=np.uint64)
    block, skip = divmod(int(start), 4)
    bitgen = np.random.Philox(key=[int(seed) & MASK64, int(stream) & MASK64],
                              counter=[block, 0, 0, 0])
    return bitgen.random_raw(skip + count)[skip:]


def uniforms(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    """Doubles in the open interval (0, 1) at positions ``start .. start+count-1``."""
    raw = raw64(seed, stream, start, count)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def generator(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """A numpy Generator on substream ``index`` of ``(seed, stream)``.

    The substream index occupies the second counter word, so substreams do not
    overlap unless one of them draws 2^64 blocks.
    """
    bitgen = np.random.Philox(key=[int(seed) & MASK64, int(stream) & MASK64],
                              counter=[0, int(index) & MASK64, 0, 0])
    return np.random.Generator(bitgen)


def chunk_bounds(total: int, chunk: int = CHUNK) -> list[tuple[int, int]]:
    return [(s, min(s + chunk, total)) for s in range(0, total, chunk)]


def ordered_map(fn: Callable[[tuple[int, int]], T], items: Sequence, workers: int = 1) -> list[T]:
    """``[fn(x) for x in items]``, optionally evaluated on a thread pool."""
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
