"""Bit-exact quotient-filter serialization over a page store, plus
page-granular lookup and delete that touch only the cluster's pages.

Region layout: one header page followed by the slot bit array packed per
:func:`amqfilters.quotient.pack_slots`, zero-padded to whole pages.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction

from .errors import CorruptEncoding, DeleteAbsent, OutOfRange
from .fingerprint import Fingerprint
from .quotient import QuotientFilter, unpack_slots
from .storage import PageStore

QF_MAGIC = b"AMQQFV01"
HEADER_STRUCT = struct.Struct("<8sBBBBQ")
HEADER_SIZE = 32


@dataclass(frozen=True)
class QfHeader:
    q: int
    r: int
    max_load_num: int
    max_load_den: int
    count: int

    @property
    def max_load(self) -> Fraction:
        return Fraction(self.max_load_num, self.max_load_den)

    def to_bytes(self) -> bytes:
        packed = HEADER_STRUCT.pack(
            QF_MAGIC, self.q, self.r, self.max_load_num, self.max_load_den,
            self.count,
        )
        return packed.ljust(HEADER_SIZE, b"\0")

    @classmethod
    def from_bytes(cls, data: bytes) -> "QfHeader":
        magic, q, r, num, den, count = HEADER_STRUCT.unpack_from(data)
        if magic != QF_MAGIC:
            raise CorruptEncoding(f"bad header magic {magic!r}")
        if q < 1 or r < 1 or q + r > 64 or den == 0:
            raise CorruptEncoding(f"bad header geometry q={q}, r={r}")
        return cls(q, r, num, den, count)

    @classmethod
    def for_filter(cls, qf: QuotientFilter) -> "QfHeader":
        load = qf.max_load
        return cls(qf.q, qf.r, load.numerator, load.denominator, qf.count)


@dataclass(frozen=True)
class PageSpan:
    base: int
    pages: int


def qf_data_pages(q: int, r: int, page_size: int) -> int:
    """Pages needed for the packed slot array of a (q, r) filter."""
    bits = (1 << q) * (r + 3)
    return -(-bits // (8 * page_size))


def qf_region_pages(q: int, r: int, page_size: int) -> int:
    return 1 + qf_data_pages(q, r, page_size)


def serialize_qf(qf: QuotientFilter, store: PageStore, base: int) -> PageSpan:
    """Write header + slot array with strictly sequential page writes."""
    data = qf.to_bytes()
    pages = qf_region_pages(qf.q, qf.r, store.page_size)
    if base < 0 or base + pages > store.page_count:
        raise OutOfRange(
            f"region [{base}, {base + pages}) exceeds store of "
            f"{store.page_count} pages"
        )
    store.write_page(base, QfHeader.for_filter(qf).to_bytes().ljust(store.page_size, b"\0"))
    psz = store.page_size
    for k in range(pages - 1):
        chunk = data[k * psz : (k + 1) * psz]
        store.write_page(base + 1 + k, chunk.ljust(psz, b"\0"))
    return PageSpan(base, pages)


def read_qf_header(store: PageStore, base: int) -> QfHeader:
    return QfHeader.from_bytes(store.read_page(base))


def deserialize_qf(store: PageStore, base: int) -> QuotientFilter:
    """Inverse of :func:`serialize_qf`; reads the region sequentially.

    The element count is recomputed from the slot array (each stored
    remainder occupies exactly one non-empty slot), so the result is
    correct even if cluster-local deletes ran after the last full write.
    """
    header = read_qf_header(store, base)
    pages = qf_data_pages(header.q, header.r, store.page_size)
    data = b"".join(store.read_page(base + 1 + k) for k in range(pages))
    return QuotientFilter.from_packed(
        header.q, header.r, data, Fraction(header.max_load_num, header.max_load_den)
    )


class _SlotWindow:
    """Per-operation page cache with slot-level read/write over a region's
    data pages.  Every page fault goes through the store, so the store's
    counters reflect exactly the pages this operation touched."""

    def __init__(self, store: PageStore, data_base: int, r: int):
        self.store = store
        self.data_base = data_base
        self.slot_bits = r + 3
        self.slot_mask = (1 << (r + 3)) - 1
        self.page_size = store.page_size
        self.pages: dict[int, bytearray] = {}
        self.dirty: set[int] = set()

    def _page(self, pg: int) -> bytearray:
        buf = self.pages.get(pg)
        if buf is None:
            buf = bytearray(self.store.read_page(self.data_base + pg))
            self.pages[pg] = buf
        return buf

    def _chunk(self, b0: int, b1: int) -> bytes:
        psz = self.page_size
        p0, p1 = b0 // psz, (b1 - 1) // psz
        if p0 == p1:
            buf = self._page(p0)
            off = b0 - p0 * psz
            return bytes(buf[off : off + (b1 - b0)])
        head = self._page(p0)[b0 - p0 * psz :]
        return bytes(head) + bytes(self._page(p1)[: b1 - p1 * psz])

    def occupied(self, i: int) -> bool:
        """Occupancy bit only: always a single-byte, single-page read."""
        bit = i * self.slot_bits
        byte_index = bit >> 3
        buf = self._page(byte_index // self.page_size)
        return bool((buf[byte_index % self.page_size] >> (bit & 7)) & 1)

    def read_slot(self, i: int) -> int:
        bit = i * self.slot_bits
        b0 = bit >> 3
        b1 = (bit + self.slot_bits + 7) >> 3
        v = int.from_bytes(self._chunk(b0, b1), "little")
        return (v >> (bit & 7)) & self.slot_mask

    def write_slot(self, i: int, value: int) -> None:
        bit = i * self.slot_bits
        b0 = bit >> 3
        b1 = (bit + self.slot_bits + 7) >> 3
        shift = bit & 7
        width = b1 - b0
        cur = int.from_bytes(self._chunk(b0, b1), "little")
        cur &= ~(self.slot_mask << shift)
        cur |= value << shift
        raw = cur.to_bytes(width, "little")
        psz = self.page_size
        for off in range(width):
            byte_index = b0 + off
            pg = byte_index // psz
            self._page(pg)[byte_index % psz] = raw[off]
            self.dirty.add(pg)

    def flush(self) -> None:
        for pg in sorted(self.dirty):
            self.store.write_page(self.data_base + pg, bytes(self.pages[pg]))
        self.dirty.clear()


class DiskQfView:
    """Cluster-local operations on a serialized quotient filter.

    The geometry is supplied by the caller (typically cached from the
    region header) so queries never spend a page read on the header.
    """

    def __init__(self, store: PageStore, base: int, q: int, r: int):
        self.store = store
        self.base = base
        self.q = q
        self.r = r
        self.mask = (1 << q) - 1

    def _split(self, value: int) -> tuple[int, int]:
        return value >> self.r, value & ((1 << self.r) - 1)

    def may_contain_value(self, value: int) -> bool:
        """Fig-3-style walk reading only the pages under one cluster."""
        win = _SlotWindow(self.store, self.base + 1, self.r)
        fq, fr = self._split(value)
        if not win.occupied(fq):
            return False
        mask = self.mask
        b = fq
        while win.read_slot(b) & 4:
            b = (b - 1) & mask
        s = b
        while b != fq:
            s = (s + 1) & mask
            while win.read_slot(s) & 2:
                s = (s + 1) & mask
            b = (b + 1) & mask
            while not (win.read_slot(b) & 1):
                b = (b + 1) & mask
        while True:
            v = win.read_slot(s)
            rem = v >> 3
            if rem == fr:
                return True
            if rem > fr:
                return False
            s = (s + 1) & mask
            if not (win.read_slot(s) & 2):
                return False

    def delete_value(self, value: int) -> None:
        """Remove one copy via read-modify-write of the cluster's pages."""
        win = _SlotWindow(self.store, self.base + 1, self.r)
        fq, fr = self._split(value)
        mask = self.mask
        if not (win.read_slot(fq) & 1):
            raise DeleteAbsent(f"fingerprint {value:#x} not on store")
        c = fq
        steps = 0
        while win.read_slot((c - 1) & mask) & 7:
            c = (c - 1) & mask
            steps += 1
            if steps > mask:
                raise CorruptEncoding("no empty slot found walking back")
        entries: list[tuple[int, int]] = []  # (bucket, remainder)
        queue: list[int] = []
        qh = 0
        cur_b = -1
        i = c
        while True:
            v = win.read_slot(i)
            if v & 7 == 0:
                break
            if v & 1:
                queue.append(i)
            if v & 2:
                if cur_b < 0:
                    raise CorruptEncoding("continuation at cluster start")
            else:
                if qh >= len(queue):
                    raise CorruptEncoding("run without an occupied bucket")
                cur_b = queue[qh]
                qh += 1
            entries.append((cur_b, v >> 3))
            i = (i + 1) & mask
            if len(entries) > mask:
                raise CorruptEncoding("cluster longer than the slot array")
        if qh != len(queue):
            raise CorruptEncoding("occupied bucket with no run")
        idx = -1
        nrun = 0
        for k, (b, rem) in enumerate(entries):
            if b == fq:
                nrun += 1
                if idx < 0 and rem == fr:
                    idx = k
        if idx < 0:
            raise DeleteAbsent(f"fingerprint {value:#x} not on store")
        length = len(entries)
        occ_clear = fq if nrun == 1 else -1
        pos = 0
        prev_b = -1
        for k, (b, rem) in enumerate(entries):
            if k == idx:
                continue
            boff = (b - c) & mask
            while pos < boff:
                j = (c + pos) & mask
                self._rewrite(win, j, 0, occ_clear)
                pos += 1
            j = (c + pos) & mask
            nm = 0
            if b == prev_b:
                nm |= 2
            if pos != boff:
                nm |= 4
            self._rewrite(win, j, nm | (rem << 3), occ_clear)
            pos += 1
            prev_b = b
        while pos < length:
            j = (c + pos) & mask
            self._rewrite(win, j, 0, occ_clear)
            pos += 1
        win.flush()

    def _rewrite(self, win: _SlotWindow, j: int, body: int, occ_clear: int) -> None:
        occ = win.read_slot(j) & 1
        if j == occ_clear:
            occ = 0
        win.write_slot(j, body | occ)

    def decode_values(self):
        """Full multiset, via a sequential deserialize."""
        return deserialize_qf(self.store, self.base).decode()


def disk_qf_lookup(
    store: PageStore, base: int, header: QfHeader, f: Fingerprint
) -> bool:
    """Membership test against a serialized filter, reading only the pages
    overlapping the cluster of f's bucket."""
    if f.p != header.q + header.r:
        raise CorruptEncoding(
            f"fingerprint width {f.p} != serialized width {header.q + header.r}"
        )
    return DiskQfView(store, base, header.q, header.r).may_contain_value(f.value)


def disk_qf_delete(
    store: PageStore, base: int, header: QfHeader, f: Fingerprint
) -> None:
    if f.p != header.q + header.r:
        raise CorruptEncoding(
            f"fingerprint width {f.p} != serialized width {header.q + header.r}"
        )
    DiskQfView(store, base, header.q, header.r).delete_value(f.value)
