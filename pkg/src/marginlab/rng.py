"""Seed substreams.

Every random draw in the package comes from a generator derived from a master
seed plus a tuple of keys (theta index, replicate, purpose tag). The keys are
hashed, so the stream for a job does not depend on which worker runs it or in
which order jobs are scheduled.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _key_words(keys) -> list[int]:
    h = hashlib.blake2b(digest_size=16)
    for key in keys:
        h.update(repr(key).encode())
        h.update(b"\x1f")
    digest = h.digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def substream(seed: int, *keys) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``; identical inputs give identical streams."""
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    ss = np.random.SeedSequence(entropy=[int(seed)] + _key_words(keys))
    return np.random.Generator(np.random.PCG64(ss))
