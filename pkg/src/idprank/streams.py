"""Seedable, splittable random streams.

Every stochastic routine takes a ``SeedSequence`` (or a plain integer seed)
and derives child streams from it by appending integer keys. Children are
built directly from ``(entropy, spawn_key)`` rather than through
``SeedSequence.spawn`` so that deriving a stream never mutates the parent;
the same key always yields the same stream regardless of call order.
"""

from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, None]


def as_seed_sequence(seed: SeedLike, default: int = 0) -> np.random.SeedSequence:
    if seed is None:
        seed = default
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"expected an integer seed or SeedSequence, got {type(seed).__name__}")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.SeedSequence(int(seed))


def child(seq: np.random.SeedSequence, *keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        entropy=seq.entropy,
        spawn_key=tuple(seq.spawn_key) + tuple(int(k) for k in keys),
        pool_size=seq.pool_size,
    )


def generator(seed: SeedLike, *keys: int) -> np.random.Generator:
    """A PCG64 generator for the stream ``seed / keys``."""
    return np.random.Generator(np.random.PCG64(child(as_seed_sequence(seed), *keys)))
