"""Deterministic substream derivation from one root seed.

Every randomized stage in the package draws from a child generator obtained as
``substream(seed, *key)``. The same (seed, key) always yields the same stream,
independent of call order, so sweeps stay reproducible under resumption or
parallel scheduling. Key parts are non-negative ints, or strings (hashed with
crc32).
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    value = int(part)
    if value < 0:
        raise ValueError(f"substream key parts must be non-negative, got {part!r}")
    return value


def substream(seed: int, *key) -> np.random.Generator:
    """Child generator identified by (seed, key)."""
    parts = tuple(_key_part(p) for p in key)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=parts))


def substream_seed(seed: int, *key) -> int:
    """Stable integer sub-seed, for nesting keyed streams under other APIs."""
    parts = tuple(_key_part(p) for p in key)
    return int(np.random.SeedSequence(int(seed), spawn_key=parts).generate_state(1)[0])
