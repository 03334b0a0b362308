"""Keyed random streams.

Every random decision in a run draws from a stream derived from the master
seed plus a structural key (purpose, generation, role, index...). Streams are
therefore independent of evaluation order, which is what makes parallel and
sequential execution agree and whole runs reproducible bit for bit.
"""

from __future__ import annotations

import zlib

import numpy as np


def _encode(part) -> int:
    if isinstance(part, bool):
        raise TypeError("bool key parts are ambiguous")
    if isinstance(part, int):
        if part < 0:
            raise ValueError(f"key part {part} is negative")
        return part
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"cannot key a random stream on {type(part).__name__}")


def seed_sequence(master_seed: int, *key) -> np.random.SeedSequence:
    entropy = [_encode(master_seed)] + [_encode(part) for part in key]
    return np.random.SeedSequence(entropy)


def generator(master_seed: int, *key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(master_seed, *key)))
