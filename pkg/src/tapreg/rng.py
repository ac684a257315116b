"""Deterministic counter-based RNG substreams.

Every stochastic object in the package (designs, signals, noise, optimizer
restarts, MC sample blocks, bootstrap resamples) is drawn from a Philox
stream keyed by (master_seed, *path).  The key fully determines the stream,
so results do not depend on execution order or thread schedule.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["substream"]

_MASK64 = (1 << 64) - 1


def _key_part(part) -> int:
    if isinstance(part, (bool,)):
        raise TypeError("stream key parts must be ints or strings, got a bool")
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK64
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"stream key parts must be ints or strings, got {part!r}")


def substream(master_seed: int, *path) -> np.random.Generator:
    """Return the generator for the substream keyed by (master_seed, *path).

    Path components may be non-negative ints or short string labels
    (strings are hashed with crc32).  The same key always yields the same
    stream, independent of platform, thread count, or the order in which
    sibling streams are instantiated.
    """
    key = tuple(_key_part(p) for p in path)
    seq = np.random.SeedSequence(int(master_seed) & _MASK64, spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))
