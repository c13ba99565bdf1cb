"""The in-RAM quotient filter: a bit-packed multiset of p-bit fingerprints.

Fingerprints are stored as (quotient, remainder) pairs in an open hash
table of m = 2**q slots with three metadata bits per slot.  Remainders
within a run are kept sorted, which makes the slot array a canonical
function of the stored multiset: two filters holding the same fingerprints
are bit-identical regardless of operation order.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _qfkernels as _k
from .errors import (
    CorruptEncoding,
    DeleteAbsent,
    FilterFull,
    InvalidGeometry,
    RemainderExhausted,
    WidthMismatch,
)
from .fingerprint import Fingerprint

DEFAULT_MAX_LOAD = Fraction(3, 4)


def _as_load(value) -> Fraction:
    load = Fraction(value)
    if not 0 < load < 1:
        raise InvalidGeometry(f"max_load must be in (0, 1), got {value}")
    if load.numerator > 255 or load.denominator > 255:
        raise InvalidGeometry(
            "max_load must be expressible as a ratio of two bytes "
            f"(got {load.numerator}/{load.denominator})"
        )
    return load


@dataclass(frozen=True)
class QfGeometry:
    """Shape of a quotient filter: quotient bits, remainder bits, load cap."""

    q: int
    r: int
    max_load: Fraction = DEFAULT_MAX_LOAD

    def __post_init__(self) -> None:
        if self.q < 1 or self.r < 1 or self.q + self.r > 64:
            raise InvalidGeometry(
                f"need q >= 1, r >= 1, q + r <= 64; got q={self.q}, r={self.r}"
            )
        object.__setattr__(self, "max_load", _as_load(self.max_load))

    @property
    def m(self) -> int:
        return 1 << self.q

    @property
    def p(self) -> int:
        return self.q + self.r

    @property
    def capacity(self) -> int:
        return math.floor(self.max_load * self.m)

    @property
    def slot_bits(self) -> int:
        return self.r + 3


@dataclass
class ClusterStats:
    """One-pass statistics over maximal runs of non-empty slots."""

    count: int
    mean_len: float
    max_len: int
    histogram: dict[int, int] = field(default_factory=dict)


class QuotientFilter:
    """Mutable multiset of p-bit fingerprints with exact delete support."""

    def __init__(self, q: int, r: int, max_load=DEFAULT_MAX_LOAD):
        self.geometry = QfGeometry(q, r, max_load)
        self._meta = np.zeros(self.geometry.m, dtype=np.uint8)
        self._rem = np.zeros(self.geometry.m, dtype=np.uint64)
        self._count = 0

    @classmethod
    def from_geometry(cls, geometry: QfGeometry) -> "QuotientFilter":
        return cls(geometry.q, geometry.r, geometry.max_load)

    # -- basic accessors -------------------------------------------------

    @property
    def q(self) -> int:
        return self.geometry.q

    @property
    def r(self) -> int:
        return self.geometry.r

    @property
    def p(self) -> int:
        return self.geometry.p

    @property
    def slot_count(self) -> int:
        return self.geometry.m

    @property
    def capacity(self) -> int:
        return self.geometry.capacity

    @property
    def max_load(self) -> Fraction:
        return self.geometry.max_load

    def __len__(self) -> int:
        return self._count

    @property
    def count(self) -> int:
        return self._count

    @property
    def load_factor(self) -> float:
        return self._count / self.geometry.m

    def _check_fingerprint(self, f: Fingerprint) -> int:
        if f.p != self.p:
            raise WidthMismatch(f"fingerprint width {f.p} != filter width {self.p}")
        return f.value

    # -- core operations -------------------------------------------------

    def may_contain(self, f: Fingerprint) -> bool:
        """Never false for a stored fingerprint; true spuriously only on
        a hard collision of the underlying hash."""
        return self._contains_value(self._check_fingerprint(f))

    def insert(self, f: Fingerprint) -> None:
        self._insert_value(self._check_fingerprint(f))

    def delete(self, f: Fingerprint) -> None:
        """Remove one stored copy of ``f``; exact at fingerprint level."""
        self._delete_value(self._check_fingerprint(f))

    def _contains_value(self, value: int) -> bool:
        fq = value >> self.r
        fr = np.uint64(value & ((1 << self.r) - 1))
        return bool(_k.lookup(self._meta, self._rem, self.geometry.m - 1, fq, fr))

    def _insert_value(self, value: int) -> tuple[int, int]:
        if self._count >= self.capacity:
            raise FilterFull(
                f"filter at load cap ({self._count}/{self.capacity} elements)"
            )
        fq = value >> self.r
        fr = np.uint64(value & ((1 << self.r) - 1))
        span = _k.insert(self._meta, self._rem, self.geometry.m - 1, fq, fr)
        self._count += 1
        return span

    def _delete_value(self, value: int) -> tuple[int, int]:
        fq = value >> self.r
        fr = np.uint64(value & ((1 << self.r) - 1))
        status, lo, hi = _k.delete(self._meta, self._rem, self.geometry.m - 1, fq, fr)
        if status == _k.ABSENT:
            raise DeleteAbsent(f"fingerprint {value:#x} not in filter")
        if status == _k.CORRUPT:
            raise CorruptEncoding("slot metadata inconsistent during delete")
        self._count -= 1
        return lo, hi

    # -- bulk helpers ----------------------------------------------------

    def insert_values(self, values: np.ndarray | Iterable[int]) -> None:
        """Insert many raw fingerprint values at once."""
        arr = np.ascontiguousarray(values, dtype=np.uint64)
        if arr.size == 0:
            return
        if int(arr.max()) >> self.p:
            raise WidthMismatch(f"value wider than {self.p} bits")
        if self._count + arr.size > self.capacity:
            raise FilterFull(
                f"{arr.size} values would exceed capacity {self.capacity}"
            )
        _k.insert_many(self._meta, self._rem, self.geometry.m - 1, self.r, arr)
        self._count += arr.size

    def contains_values(self, values: np.ndarray | Iterable[int]) -> np.ndarray:
        arr = np.ascontiguousarray(values, dtype=np.uint64)
        out = np.zeros(arr.size, dtype=np.bool_)
        _k.contains_many(self._meta, self._rem, self.geometry.m - 1, self.r, arr, out)
        return out

    # -- reconstruction --------------------------------------------------

    def decode(self) -> np.ndarray:
        """The exact stored multiset as a sorted uint64 array.

        Walks every cluster and validates the metadata encoding.
        """
        nonempty = int(np.count_nonzero(self._meta & 7))
        out = np.empty(nonempty, dtype=np.uint64)
        status, n = _k.decode(self._meta, self._rem, self.geometry.m - 1, self.r, out)
        if status != _k.OK:
            raise CorruptEncoding("slot metadata is not a valid encoding")
        if n != self._count:
            raise CorruptEncoding(
                f"decoded {n} fingerprints but count says {self._count}"
            )
        return out

    def iterate_ordered(self) -> Iterator[Fingerprint]:
        """All stored fingerprints in ascending order, with multiplicity."""
        p = self.p
        for v in self.decode():
            yield Fingerprint(int(v), p)

    def cluster_stats(self) -> ClusterStats:
        out = np.empty(self.geometry.m // 2 + 1, dtype=np.int64)
        n = _k.cluster_lengths(self._meta, self.geometry.m - 1, out)
        if n < 0:
            raise CorruptEncoding("no empty slot; filter not decodable")
        if n == 0:
            return ClusterStats(0, 0.0, 0, {})
        lengths = out[:n]
        hist = dict(sorted(Counter(int(x) for x in lengths).items()))
        return ClusterStats(n, float(lengths.mean()), int(lengths.max()), hist)

    # -- geometry changes ------------------------------------------------

    def resize_double(self) -> "QuotientFilter":
        """Same multiset at (q+1, r-1); no rehash, fingerprints unchanged."""
        if self.r < 2:
            raise RemainderExhausted("cannot shrink remainder below 1 bit")
        out = QuotientFilter(self.q + 1, self.r - 1, self.max_load)
        out.insert_values(self.decode())
        return out

    def resize_halve(self) -> "QuotientFilter":
        """Same multiset at (q-1, r+1)."""
        if self.q < 2:
            raise InvalidGeometry("cannot shrink quotient below 1 bit")
        out = QuotientFilter(self.q - 1, self.r + 1, self.max_load)
        if self._count > out.capacity:
            raise FilterFull(
                f"{self._count} elements exceed halved capacity {out.capacity}"
            )
        out.insert_values(self.decode())
        return out

    # -- housekeeping ----------------------------------------------------

    def reset(self) -> None:
        self._meta[:] = 0
        self._rem[:] = 0
        self._count = 0

    def to_bytes(self) -> bytes:
        """Slot array as the canonical contiguous bit stream.

        Slot i occupies bits [i*(r+3), (i+1)*(r+3)), least significant bit
        first; within a slot: bit 0 occupied, bit 1 continuation, bit 2
        shifted, bits 3.. the remainder.
        """
        return pack_slots(self._meta, self._rem, self.r)

    @classmethod
    def from_packed(
        cls, q: int, r: int, data: bytes, max_load=DEFAULT_MAX_LOAD
    ) -> "QuotientFilter":
        out = cls(q, r, max_load)
        meta, rem = unpack_slots(data, out.geometry.m, r)
        out._meta[:] = meta
        out._rem[:] = rem
        out._count = int(np.count_nonzero(meta & 7))
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuotientFilter):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and self._count == other._count
            and bool(np.array_equal(self._meta, other._meta))
            and bool(np.array_equal(self._rem, other._rem))
        )

    def __repr__(self) -> str:
        return (
            f"QuotientFilter(q={self.q}, r={self.r}, count={self._count}, "
            f"load={self.load_factor:.3f})"
        )


def merge_filters(
    inputs: Sequence[QuotientFilter], geometry: QfGeometry
) -> QuotientFilter:
    """Merge several filters into one at ``geometry`` via a k-way merge of
    their ordered fingerprint streams.

    All inputs and the output must share the fingerprint width p; the
    merged multiset is re-split at the output's (q, r).
    """
    for qf in inputs:
        if qf.p != geometry.p:
            raise WidthMismatch(
                f"input width {qf.p} != output width {geometry.p}"
            )
    total = sum(qf.count for qf in inputs)
    if total > geometry.capacity:
        raise FilterFull(
            f"{total} merged elements exceed capacity {geometry.capacity}"
        )
    out = QuotientFilter.from_geometry(geometry)
    if total == 0:
        return out
    streams = [qf.decode() for qf in inputs]
    out.insert_values(merge_sorted_arrays(streams))
    return out


def merge_sorted_arrays(arrays: Sequence[np.ndarray]) -> np.ndarray:
    """k-way merge of sorted uint64 arrays."""
    arrays = [np.ascontiguousarray(a, dtype=np.uint64) for a in arrays if len(a)]
    if not arrays:
        return np.empty(0, dtype=np.uint64)
    if len(arrays) == 1:
        return arrays[0]
    flat = np.concatenate(arrays)
    offsets = np.zeros(len(arrays) + 1, dtype=np.int64)
    np.cumsum([a.size for a in arrays], out=offsets[1:])
    out = np.empty(flat.size, dtype=np.uint64)
    n = _k.merge_sorted(flat, offsets, out)
    assert n == flat.size
    return out


def pack_slots(meta: np.ndarray, rem: np.ndarray, r: int) -> bytes:
    """Bit-pack parallel slot arrays into the canonical stream."""
    m = meta.size
    width = r + 3
    bits = np.empty((m, width), dtype=np.uint8)
    bits[:, 0] = meta & 1
    bits[:, 1] = (meta >> 1) & 1
    bits[:, 2] = (meta >> 2) & 1
    shifts = np.arange(r, dtype=np.uint64)
    bits[:, 3:] = (rem[:, None] >> shifts[None, :]).astype(np.uint8) & 1
    return np.packbits(bits.reshape(-1), bitorder="little").tobytes()


def unpack_slots(data: bytes, m: int, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`pack_slots`; ignores any trailing padding bits."""
    width = r + 3
    nbits = m * width
    raw = np.frombuffer(data, dtype=np.uint8)
    if raw.size * 8 < nbits:
        raise CorruptEncoding(
            f"need {nbits} bits for {m} slots, got {raw.size * 8}"
        )
    bits = np.unpackbits(raw, count=nbits, bitorder="little").reshape(m, width)
    meta = (bits[:, 0] | (bits[:, 1] << 1) | (bits[:, 2] << 2)).astype(np.uint8)
    shifts = np.arange(r, dtype=np.uint64)
    rem = (bits[:, 3:].astype(np.uint64) << shifts[None, :]).sum(
        axis=1, dtype=np.uint64
    )
    return meta, rem
