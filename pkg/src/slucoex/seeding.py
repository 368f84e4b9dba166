"""Per-cell random streams derived from a hashed key."""

from __future__ import annotations

import hashlib

import numpy as np


def stream(*key) -> np.random.Generator:
    """A generator that depends only on ``key``, not on call order or process."""
    digest = hashlib.sha256(repr(tuple(key)).encode("utf-8")).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 32, 4)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))
