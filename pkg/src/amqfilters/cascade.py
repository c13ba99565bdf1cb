"""Cascade filter: an in-RAM QF over exponentially growing on-store levels.

Level i holds m0 * b**i slots, where b is the fanout (a power of two so
consecutive levels differ by whole quotient bits).  All levels share the
fingerprint width p; deeper levels simply move bits from the remainder
into the quotient, so the false positive rate equals a single filter
holding everything.  When the RAM level fills, the smallest level i that
can absorb levels 0..i is rebuilt by an ordered merge, and the levels
above it are emptied.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .diskqf import DiskQfView, deserialize_qf, qf_region_pages, serialize_qf
from .errors import DeleteAbsent, FilterFull, InvalidGeometry, WidthMismatch
from .fingerprint import Fingerprint
from .quotient import DEFAULT_MAX_LOAD, QfGeometry, QuotientFilter, merge_sorted_arrays
from .storage import PageStore

CF_MAGIC = b"AMQCFSUP"
_SUPER_HEAD = struct.Struct("<8sBB")
_SUPER_LEVEL = struct.Struct("<BQQ")


@dataclass(frozen=True)
class LevelInfo:
    level: int
    slots: int
    count: int
    load: float
    pages: int


class CascadeFilter:
    """COLA-style hierarchy of quotient filters with configurable fanout."""

    def __init__(
        self,
        store: PageStore,
        p: int,
        q0: int,
        fanout: int = 2,
        max_levels: int = 4,
        max_load=DEFAULT_MAX_LOAD,
    ):
        if fanout < 2 or fanout & (fanout - 1):
            raise InvalidGeometry(
                f"fanout must be a power of two >= 2, got {fanout}"
            )
        if max_levels < 1:
            raise InvalidGeometry("need at least one on-store level")
        lb = fanout.bit_length() - 1
        if q0 < 1 or p - q0 - max_levels * lb < 1:
            raise InvalidGeometry(
                f"deepest level would keep {p - q0 - max_levels * lb} remainder "
                f"bits; need >= 1 (p={p}, q0={q0}, fanout={fanout}, "
                f"levels={max_levels})"
            )
        self.store = store
        self.p = p
        self.fanout = fanout
        self.max_levels = max_levels
        self.q0 = QuotientFilter(q0, p - q0, max_load)
        self._max_load = self.q0.max_load
        self._geom = [None] + [
            QfGeometry(q0 + i * lb, p - q0 - i * lb, self._max_load)
            for i in range(1, max_levels + 1)
        ]
        self._region_pages = [0] + [
            qf_region_pages(g.q, g.r, store.page_size) for g in self._geom[1:]
        ]
        bases = [0]
        off = 1
        for i in range(1, max_levels + 1):
            bases.append(off)
            off += 2 * self._region_pages[i]
        self._bases = bases
        if store.page_count < off:
            raise InvalidGeometry(
                f"store of {store.page_count} pages cannot hold {off} pages "
                f"of level regions"
            )
        self.counts = [0] * (max_levels + 1)  # 1-indexed; slot 0 unused
        self._live = [0] * (max_levels + 1)
        self._gen = [0] * (max_levels + 1)
        self.merge_events: list[int] = []
        self._write_superblock()

    # -- layout ----------------------------------------------------------

    def _level_base(self, i: int) -> int:
        return self._bases[i] + self._live[i] * self._region_pages[i]

    def level_geometry(self, i: int) -> QfGeometry:
        if i == 0:
            return self.q0.geometry
        return self._geom[i]

    def _write_superblock(self) -> None:
        raw = bytearray(_SUPER_HEAD.pack(CF_MAGIC, self.fanout, self.max_levels))
        for i in range(1, self.max_levels + 1):
            raw += _SUPER_LEVEL.pack(self._live[i], self._gen[i], self.counts[i])
        self.store.write_page(0, bytes(raw).ljust(self.store.page_size, b"\0"))

    def _check(self, f: Fingerprint) -> int:
        if f.p != self.p:
            raise WidthMismatch(f"fingerprint width {f.p} != structure width {self.p}")
        return f.value

    @property
    def count(self) -> int:
        return self.q0.count + sum(self.counts[1:])

    def nonempty_levels(self) -> list[int]:
        return [i for i in range(1, self.max_levels + 1) if self.counts[i] > 0]

    # -- operations --------------------------------------------------------

    def insert(self, f: Fingerprint) -> None:
        """Insert into the RAM level; merge down when it reaches its cap
        (the triggering element is included in the merge)."""
        value = self._check(f)
        if self.q0.count + 1 >= self.q0.capacity:
            target = self._find_merge_level(self.q0.count + 1)
            if target is None:
                raise FilterFull(
                    f"no level through {self.max_levels} can absorb "
                    f"{self.q0.count + 1 + sum(self.counts[1:])} elements"
                )
            self.q0._insert_value(value)
            self._merge_into(target)
        else:
            self.q0._insert_value(value)

    def _find_merge_level(self, pending: int):
        """Smallest i with sum of counts through i within level i's cap."""
        total = pending
        for i in range(1, self.max_levels + 1):
            total += self.counts[i]
            if total <= self._geom[i].capacity:
                return i
        return None

    def _merge_into(self, target: int) -> None:
        streams = [self.q0.decode()]
        for j in range(1, target + 1):
            if self.counts[j] > 0:
                streams.append(deserialize_qf(self.store, self._level_base(j)).decode())
        merged = merge_sorted_arrays(streams)
        geom = self._geom[target]
        out = QuotientFilter.from_geometry(geom)
        out.insert_values(merged)
        other = 1 - self._live[target]
        serialize_qf(
            out,
            self.store,
            self._bases[target] + other * self._region_pages[target],
        )
        self._live[target] = other
        self._gen[target] += 1
        self.counts[target] = int(merged.size)
        for j in range(1, target):
            self.counts[j] = 0
        self.q0.reset()
        self._write_superblock()
        self.merge_events.append(target)

    def may_contain(self, f: Fingerprint) -> bool:
        """RAM level first (no I/O), then shallow-to-deep with early exit."""
        value = self._check(f)
        if self.q0._contains_value(value):
            return True
        for i in range(1, self.max_levels + 1):
            if self.counts[i] == 0:
                continue
            g = self._geom[i]
            view = DiskQfView(self.store, self._level_base(i), g.q, g.r)
            if view.may_contain_value(value):
                return True
        return False

    def delete(self, f: Fingerprint) -> None:
        """Remove one copy from the shallowest level containing it."""
        value = self._check(f)
        if self.q0._contains_value(value):
            self.q0._delete_value(value)
            return
        for i in range(1, self.max_levels + 1):
            if self.counts[i] == 0:
                continue
            g = self._geom[i]
            view = DiskQfView(self.store, self._level_base(i), g.q, g.r)
            try:
                view.delete_value(value)
            except DeleteAbsent:
                continue
            self.counts[i] -= 1
            return
        raise DeleteAbsent(f"fingerprint {value:#x} not present in any level")

    def level_info(self) -> list[LevelInfo]:
        """Level 0 always, plus every nonempty on-store level."""
        infos = [
            LevelInfo(
                0,
                self.q0.slot_count,
                self.q0.count,
                self.q0.count / self.q0.slot_count,
                0,
            )
        ]
        for i in self.nonempty_levels():
            g = self._geom[i]
            infos.append(
                LevelInfo(
                    i, g.m, self.counts[i], self.counts[i] / g.m,
                    self._region_pages[i],
                )
            )
        return infos

    def __repr__(self) -> str:
        return (
            f"CascadeFilter(p={self.p}, fanout={self.fanout}, "
            f"q0_count={self.q0.count}, levels={self.counts[1:]})"
        )
