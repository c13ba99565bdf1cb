"""Buffered quotient filter: an in-RAM buffer QF in front of one large
on-store QF.

Inserts land in the buffer; when it reaches its load cap the buffer is
merged into the on-store filter with purely sequential page I/O.  The
store holds two alternating regions (A/B) plus a superblock page naming
the live region, so a flush writes fresh pages and swaps atomically.
Buffer and store filter share the fingerprint width p, so the false
positive rate equals a single filter holding everything.
"""

from __future__ import annotations

import struct

from .diskqf import DiskQfView, deserialize_qf, qf_region_pages, serialize_qf
from .errors import DeleteAbsent, FilterFull, InvalidGeometry, WidthMismatch
from .fingerprint import Fingerprint
from .quotient import DEFAULT_MAX_LOAD, QuotientFilter, merge_sorted_arrays
from .storage import PageStore

BQF_MAGIC = b"AMQBQSUP"
_SUPER = struct.Struct("<8sBQQ")


class BufferedQuotientFilter:
    """One QF as buffer, one QF on the page store."""

    def __init__(
        self,
        store: PageStore,
        p: int,
        buffer_q: int,
        disk_q: int,
        max_load=DEFAULT_MAX_LOAD,
    ):
        if not 1 <= buffer_q < p or not 1 <= disk_q < p:
            raise InvalidGeometry(
                f"need 1 <= q < p for buffer and store filters; "
                f"got buffer_q={buffer_q}, disk_q={disk_q}, p={p}"
            )
        self.store = store
        self.p = p
        self.ram = QuotientFilter(buffer_q, p - buffer_q, max_load)
        self._disk_q = disk_q
        self._disk_r = p - disk_q
        self._max_load = self.ram.max_load
        self.region_pages = qf_region_pages(disk_q, self._disk_r, store.page_size)
        needed = 1 + 2 * self.region_pages
        if store.page_count < needed:
            raise InvalidGeometry(
                f"store of {store.page_count} pages cannot hold superblock "
                f"plus two {self.region_pages}-page regions"
            )
        self._live = 0
        self.generation = 0
        self.disk_count = 0
        self.flush_count = 0
        self._write_superblock()

    # -- layout ----------------------------------------------------------

    def _region_base(self, which: int) -> int:
        return 1 + which * self.region_pages

    @property
    def live_base(self) -> int:
        return self._region_base(self._live)

    @property
    def disk_capacity(self) -> int:
        return QuotientFilter(self._disk_q, self._disk_r, self._max_load).capacity

    @property
    def buffer_capacity(self) -> int:
        return self.ram.capacity

    @property
    def count(self) -> int:
        return self.ram.count + self.disk_count

    def _write_superblock(self) -> None:
        raw = _SUPER.pack(BQF_MAGIC, self._live, self.generation, self.disk_count)
        self.store.write_page(0, raw.ljust(self.store.page_size, b"\0"))

    def _check(self, f: Fingerprint) -> int:
        if f.p != self.p:
            raise WidthMismatch(f"fingerprint width {f.p} != structure width {self.p}")
        return f.value

    # -- operations --------------------------------------------------------

    def insert(self, f: Fingerprint) -> None:
        """Buffer the fingerprint; flush when the buffer hits its cap (the
        triggering element is part of the flushed batch)."""
        value = self._check(f)
        if self.disk_count + self.ram.count + 1 > self.disk_capacity:
            raise FilterFull(
                f"store filter capacity {self.disk_capacity} cannot absorb "
                f"another element"
            )
        self.ram._insert_value(value)
        if self.ram.count >= self.ram.capacity:
            self.flush()

    def flush(self) -> None:
        """Two-way ordered merge of buffer and store filter, written as a
        fresh region with sequential page writes, then swapped live.
        Flushing an empty buffer is a no-op."""
        if self.ram.count == 0:
            return
        streams = [self.ram.decode()]
        if self.disk_count > 0:
            streams.append(deserialize_qf(self.store, self.live_base).decode())
        merged = merge_sorted_arrays(streams)
        out = QuotientFilter(self._disk_q, self._disk_r, self._max_load)
        out.insert_values(merged)
        target = 1 - self._live
        serialize_qf(out, self.store, self._region_base(target))
        self._live = target
        self.generation += 1
        self.disk_count = int(merged.size)
        self._write_superblock()
        self.ram.reset()
        self.flush_count += 1

    def may_contain(self, f: Fingerprint) -> bool:
        """Buffer first (no I/O), then one cluster-local probe on store."""
        value = self._check(f)
        if self.ram._contains_value(value):
            return True
        if self.disk_count == 0:
            return False
        view = DiskQfView(self.store, self.live_base, self._disk_q, self._disk_r)
        return view.may_contain_value(value)

    def delete(self, f: Fingerprint) -> None:
        """Delete from the buffer if present there, else read-modify-write
        the affected cluster on store."""
        value = self._check(f)
        if self.ram._contains_value(value):
            self.ram._delete_value(value)
            return
        if self.disk_count == 0:
            raise DeleteAbsent(f"fingerprint {value:#x} not present")
        view = DiskQfView(self.store, self.live_base, self._disk_q, self._disk_r)
        view.delete_value(value)
        self.disk_count -= 1

    def __repr__(self) -> str:
        return (
            f"BufferedQuotientFilter(p={self.p}, buffered={self.ram.count}, "
            f"on_store={self.disk_count}, flushes={self.flush_count})"
        )
