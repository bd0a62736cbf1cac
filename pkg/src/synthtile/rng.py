"""Seeded random streams with named, platform-independent substreams."""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def label_key(label: str) -> int:
    """Stable 64-bit integer for a stream label (blake2b, not Python's salted hash)."""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class SeededRng:
    """A 64-bit seed plus a path of stream labels.

    ``SeededRng(seed).child("terrain").generator()`` always yields the same
    PCG64 sequence for the same seed and label path, independent of how many
    other streams were drawn before it.
    """

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        self.seed = int(seed) & _MASK64
        self.path = tuple(path)

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, path={self.path})"

    def child(self, label: str | int) -> "SeededRng":
        key = label_key(label) if isinstance(label, str) else int(label) & _MASK64
        return SeededRng(self.seed, self.path + (key,))

    def seed_sequence(self) -> np.random.SeedSequence:
        words = [self.seed & 0xFFFFFFFF, self.seed >> 32]
        for key in self.path:
            words += [key & 0xFFFFFFFF, key >> 32]
        return np.random.SeedSequence(words)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))

    def integer_seed(self) -> int:
        """A derived 64-bit integer, for seeding things that take plain ints."""
        return int(self.seed_sequence().generate_state(1, dtype=np.uint64)[0])


def stream(seed: int, *labels) -> np.random.Generator:
    """Shortcut for ``SeededRng(seed).child(l1).child(l2)....generator()``."""
    rng = SeededRng(seed)
    for lab in labels:
        rng = rng.child(lab)
    return rng.generator()
