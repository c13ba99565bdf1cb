"""Keyed 64-bit hashing and the quotient/remainder decomposition of fingerprints.

A fingerprint is the top ``p`` bits of a keyed 64-bit hash of an arbitrary
byte string.  Splitting a fingerprint at ``r`` bits gives the quotient
(high ``q = p - r`` bits, selecting a bucket) and the remainder (low ``r``
bits, the value actually stored in a slot).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidWidth

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _avalanche(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def hash_key(key: bytes, seed: int = 0) -> int:
    """Keyed 64-bit hash of ``key``; splitmix-style chunk absorption.

    Deterministic for a fixed (key, seed) pair and uniform enough for the
    fingerprint math in this package (verified by a chi-square test).
    """
    n = len(key)
    h = _avalanche((seed & _MASK64) ^ ((_GOLDEN * (n + 1)) & _MASK64))
    off = 0
    while off + 8 <= n:
        c = int.from_bytes(key[off : off + 8], "little")
        h = _avalanche(h ^ ((c * _GOLDEN) & _MASK64))
        off += 8
    if off < n:
        c = int.from_bytes(key[off:n], "little")
        h = _avalanche(h ^ ((c * _MIX1) & _MASK64))
    return h


@njit(cache=True)
def _hash_u64_kernel(keys, seed, out):  # pragma: no cover - exercised via wrapper
    golden = np.uint64(0x9E3779B97F4A7C15)
    mix1 = np.uint64(0xBF58476D1CE4E5B9)
    mix2 = np.uint64(0x94D049BB133111EB)
    base = seed ^ (golden * np.uint64(9))
    base = (base ^ (base >> np.uint64(30))) * mix1
    base = (base ^ (base >> np.uint64(27))) * mix2
    base = base ^ (base >> np.uint64(31))
    for i in range(keys.size):
        z = base ^ (keys[i] * golden)
        z = (z ^ (z >> np.uint64(30))) * mix1
        z = (z ^ (z >> np.uint64(27))) * mix2
        out[i] = z ^ (z >> np.uint64(31))


def hash_u64_array(keys: np.ndarray, seed: int = 0) -> np.ndarray:
    """Bulk variant of :func:`hash_key` for keys that are 64-bit integers.

    Equal, element for element, to ``hash_key(int(k).to_bytes(8, "little"),
    seed)``; the benchmark harness encodes its key universe this way.
    """
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    out = np.empty(keys.size, dtype=np.uint64)
    _hash_u64_kernel(keys, np.uint64(seed & _MASK64), out)
    return out


@dataclass(frozen=True)
class Fingerprint:
    """A p-bit hash value."""

    value: int
    p: int

    def __post_init__(self) -> None:
        if not 1 <= self.p <= 64:
            raise InvalidWidth(f"fingerprint width must be in [1, 64], got {self.p}")
        if not 0 <= self.value < (1 << self.p):
            raise InvalidWidth(
                f"fingerprint value {self.value:#x} does not fit in {self.p} bits"
            )


@dataclass(frozen=True)
class QuotientRemainder:
    """A fingerprint split into its bucket-selecting and stored halves."""

    quotient: int
    remainder: int
    q: int
    r: int

    def __post_init__(self) -> None:
        if self.q < 0 or self.r < 0 or self.q + self.r > 64:
            raise InvalidWidth(f"invalid split widths q={self.q}, r={self.r}")
        if not 0 <= self.quotient < (1 << self.q):
            raise InvalidWidth("quotient out of range")
        if not 0 <= self.remainder < (1 << self.r):
            raise InvalidWidth("remainder out of range")


def hash_to_fingerprint(key: bytes, p: int, seed: int = 0) -> Fingerprint:
    """Hash ``key`` and keep the top ``p`` bits."""
    if not 1 <= p <= 64:
        raise InvalidWidth(f"fingerprint width must be in [1, 64], got {p}")
    return Fingerprint(hash_key(key, seed) >> (64 - p), p)


def split(f: Fingerprint, r: int) -> QuotientRemainder:
    """Split ``f`` into (quotient, remainder) at ``r`` low bits."""
    if not 0 <= r < f.p:
        raise InvalidWidth(f"remainder width must be in [0, {f.p - 1}], got {r}")
    return QuotientRemainder(f.value >> r, f.value & ((1 << r) - 1), f.p - r, r)


def join(qr: QuotientRemainder) -> Fingerprint:
    """Reassemble a fingerprint from its quotient and remainder."""
    return Fingerprint((qr.quotient << qr.r) | qr.remainder, qr.q + qr.r)
