"""Paged storage with read/write accounting.

All access is whole pages addressed by index.  An access counts as
sequential iff its index is one past the previous access of the same kind
(reads and writes tracked independently); everything else, including the
first access, is random.  The store never caches: callers own caching
policy so the counters stay deterministic.
"""

from __future__ import annotations

import os
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace

from .errors import OutOfRange, StorageError

DEFAULT_PAGE_SIZE = 4096


@dataclass
class IoCounters:
    page_reads: int = 0
    page_writes: int = 0
    sequential_reads: int = 0
    random_reads: int = 0
    sequential_writes: int = 0
    random_writes: int = 0

    def snapshot(self) -> "IoCounters":
        return replace(self)

    def __sub__(self, other: "IoCounters") -> "IoCounters":
        return IoCounters(
            self.page_reads - other.page_reads,
            self.page_writes - other.page_writes,
            self.sequential_reads - other.sequential_reads,
            self.random_reads - other.random_reads,
            self.sequential_writes - other.sequential_writes,
            self.random_writes - other.random_writes,
        )


class PageStore(ABC):
    """Abstract block device: fixed page size, whole-page I/O, counters."""

    def __init__(self, page_size: int, page_count: int):
        if page_size < 1 or page_count < 1:
            raise StorageError(
                f"need page_size >= 1 and page_count >= 1, "
                f"got {page_size}, {page_count}"
            )
        self.page_size = page_size
        self.page_count = page_count
        self.counters = IoCounters()
        self._last_read = -2
        self._last_write = -2

    def read_page(self, index: int) -> bytes:
        if not 0 <= index < self.page_count:
            raise OutOfRange(f"page {index} outside [0, {self.page_count})")
        if index == self._last_read + 1:
            self.counters.sequential_reads += 1
        else:
            self.counters.random_reads += 1
        self.counters.page_reads += 1
        self._last_read = index
        return self._read(index)

    def write_page(self, index: int, data: bytes) -> None:
        if not 0 <= index < self.page_count:
            raise OutOfRange(f"page {index} outside [0, {self.page_count})")
        if len(data) != self.page_size:
            raise StorageError(
                f"page write must be exactly {self.page_size} bytes, "
                f"got {len(data)}"
            )
        if index == self._last_write + 1:
            self.counters.sequential_writes += 1
        else:
            self.counters.random_writes += 1
        self.counters.page_writes += 1
        self._last_write = index
        self._write(index, data)

    @abstractmethod
    def _read(self, index: int) -> bytes: ...

    @abstractmethod
    def _write(self, index: int, data: bytes) -> None: ...

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class SimulatedPageStore(PageStore):
    """In-memory store modelling an SSD at the page level."""

    def __init__(self, page_count: int, page_size: int = DEFAULT_PAGE_SIZE):
        super().__init__(page_size, page_count)
        self._buf = bytearray(page_size * page_count)

    def _read(self, index: int) -> bytes:
        off = index * self.page_size
        return bytes(self._buf[off : off + self.page_size])

    def _write(self, index: int, data: bytes) -> None:
        off = index * self.page_size
        self._buf[off : off + self.page_size] = data


class FilePageStore(PageStore):
    """One file per store, created sparse at page_count * page_size bytes."""

    def __init__(self, path, page_count: int, page_size: int = DEFAULT_PAGE_SIZE):
        super().__init__(page_size, page_count)
        self.path = os.fspath(path)
        try:
            mode = "r+b" if os.path.exists(self.path) else "w+b"
            self._fh = open(self.path, mode)
            self._fh.truncate(page_size * page_count)
        except OSError as exc:
            raise StorageError(f"cannot open {self.path}: {exc}") from exc

    def _read(self, index: int) -> bytes:
        try:
            self._fh.seek(index * self.page_size)
            data = self._fh.read(self.page_size)
        except OSError as exc:
            raise StorageError(f"read failed at page {index}: {exc}") from exc
        if len(data) != self.page_size:
            raise StorageError(f"short read at page {index}")
        return data

    def _write(self, index: int, data: bytes) -> None:
        try:
            self._fh.seek(index * self.page_size)
            self._fh.write(data)
        except OSError as exc:
            raise StorageError(f"write failed at page {index}: {exc}") from exc

    def close(self) -> None:
        self._fh.close()
