"""Deterministic seed derivation and generator construction.

Every random object in the library is a pure function of a 64-bit master seed
plus a stream label and an index, so that runs are reproducible and parallel
workers cannot collide.
"""

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(master: int, stream: str, index: int = 0) -> int:
    """Collision-resistant 64-bit seed for (master, stream, index)."""
    h = hashlib.blake2b(digest_size=8)
    h.update((master & MASK64).to_bytes(8, "little"))
    h.update(stream.encode("utf-8"))
    h.update(b"\x00")  # separator so ("ab",1) and ("a",...) cannot collide
    h.update((index & MASK64).to_bytes(8, "little"))
    return int.from_bytes(h.digest(), "little")


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def spawn(master: int, stream: str, index: int = 0) -> np.random.Generator:
    """Generator for a derived stream."""
    return make_generator(derive_seed(master, stream, index))
