"""Classic Bloom filter baseline with the optimal hash count.

Used for false-positive-rate and probe-count comparisons against the
quotient-filter family.  The k hash functions are the keyed base hash
reseeded with 1..k.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidGeometry
from .fingerprint import hash_key


class BloomFilter:
    """Bit array of m bits with k = round((m/n) ln 2) hash functions."""

    def __init__(self, m: int, expected_n: int):
        if m < 1 or expected_n < 1:
            raise InvalidGeometry(
                f"need m >= 1 and expected_n >= 1, got m={m}, n={expected_n}"
            )
        self.m = m
        self.expected_n = expected_n
        self.k = max(1, round((m / expected_n) * math.log(2)))
        self._bits = np.zeros((m + 7) // 8, dtype=np.uint8)
        self.inserted = 0
        self.probes = 0  # cumulative bits examined by may_contain

    def _positions(self, key: bytes):
        for seed in range(1, self.k + 1):
            yield hash_key(key, seed) % self.m

    def insert(self, key: bytes) -> None:
        for pos in self._positions(key):
            self._bits[pos >> 3] |= 1 << (pos & 7)
        self.inserted += 1

    def may_contain(self, key: bytes) -> bool:
        """Conjunction of the k probed bits, short-circuiting on the
        first zero bit (the probe counter reflects this)."""
        for pos in self._positions(key):
            self.probes += 1
            if not (self._bits[pos >> 3] >> (pos & 7)) & 1:
                return False
        return True

    def fill_fraction(self) -> float:
        ones = int(np.unpackbits(self._bits, count=self.m).sum())
        return ones / self.m

    def __repr__(self) -> str:
        return (
            f"BloomFilter(m={self.m}, k={self.k}, inserted={self.inserted})"
        )
