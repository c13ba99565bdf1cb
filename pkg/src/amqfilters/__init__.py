"""Approximate-membership-query structures built on the quotient filter.

The in-RAM :class:`QuotientFilter` stores a multiset of p-bit fingerprints
with exact deletes, ordered iteration, merging and resizing.  On top of it,
:class:`BufferedQuotientFilter` and :class:`CascadeFilter` run over a
:class:`PageStore` with sequential-write flushing, and :class:`BloomFilter`
serves as the classic baseline.
"""

from .bloom import BloomFilter
from .buffered import BufferedQuotientFilter
from .cascade import CascadeFilter, LevelInfo
from .diskqf import (
    DiskQfView,
    PageSpan,
    QfHeader,
    deserialize_qf,
    disk_qf_delete,
    disk_qf_lookup,
    qf_data_pages,
    qf_region_pages,
    read_qf_header,
    serialize_qf,
)
from .errors import (
    AmqError,
    CorruptEncoding,
    DeleteAbsent,
    FilterFull,
    InvalidGeometry,
    InvalidWidth,
    OutOfRange,
    RemainderExhausted,
    StorageError,
    WidthMismatch,
)
from .fingerprint import (
    Fingerprint,
    QuotientRemainder,
    hash_key,
    hash_to_fingerprint,
    hash_u64_array,
    join,
    split,
)
from .quotient import (
    ClusterStats,
    QfGeometry,
    QuotientFilter,
    merge_filters,
    merge_sorted_arrays,
)
from .storage import (
    DEFAULT_PAGE_SIZE,
    FilePageStore,
    IoCounters,
    PageStore,
    SimulatedPageStore,
)

__version__ = "0.1.0"

__all__ = [
    "AmqError",
    "BloomFilter",
    "BufferedQuotientFilter",
    "CascadeFilter",
    "ClusterStats",
    "CorruptEncoding",
    "DEFAULT_PAGE_SIZE",
    "DeleteAbsent",
    "DiskQfView",
    "FilePageStore",
    "FilterFull",
    "Fingerprint",
    "InvalidGeometry",
    "InvalidWidth",
    "IoCounters",
    "LevelInfo",
    "OutOfRange",
    "PageSpan",
    "PageStore",
    "QfGeometry",
    "QfHeader",
    "QuotientFilter",
    "QuotientRemainder",
    "RemainderExhausted",
    "SimulatedPageStore",
    "StorageError",
    "WidthMismatch",
    "deserialize_qf",
    "disk_qf_delete",
    "disk_qf_lookup",
    "hash_key",
    "hash_to_fingerprint",
    "hash_u64_array",
    "join",
    "merge_filters",
    "merge_sorted_arrays",
    "qf_data_pages",
    "qf_region_pages",
    "read_qf_header",
    "serialize_qf",
    "split",
]
