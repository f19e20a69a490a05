"""
Random Streams
Counter-based (Philox) generators addressed by a seed plus a key tuple, so
every (experiment, cell, replication, purpose) draws from its own stream.
"""

import zlib
from enum import IntEnum
from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, None]


class Purpose(IntEnum):
    GENERATE = 0
    PREFERENCE = 1
    FLIP = 2
    DETECT = 3


def name_key(name: str) -> int:
    """Stable integer key for a string (unlike hash(), not salted per process)."""
    return zlib.crc32(name.encode("utf-8"))


def seed_sequence(seed: SeedLike, *key: int) -> np.random.SeedSequence:
    """Child seed sequence for `key`, appended to whatever key `seed` already carries."""
    key = tuple(int(k) for k in key)
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(entropy=seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    return np.random.SeedSequence(entropy=seed, spawn_key=key)


def substream(seed: SeedLike, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *key)))

