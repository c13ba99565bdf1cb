"""Exception hierarchy shared by all filter structures and the storage layer."""


class AmqError(Exception):
    """Base class for all errors raised by this package."""


class InvalidWidth(AmqError):
    """A bit width is outside its allowed range."""


class InvalidGeometry(AmqError):
    """A filter or store was configured with impossible parameters."""


class WidthMismatch(AmqError):
    """A fingerprint's width does not match the structure it is used with."""


class FilterFull(AmqError):
    """The structure cannot accept another element without violating its load cap."""


class DeleteAbsent(AmqError):
    """Attempted to delete a fingerprint that is not in the stored multiset."""


class CorruptEncoding(AmqError):
    """Slot metadata is internally inconsistent and cannot be decoded."""


class RemainderExhausted(AmqError):
    """Resizing would leave fewer than one remainder bit."""


class OutOfRange(AmqError):
    """A page index is outside the store's capacity."""


class StorageError(AmqError):
    """The storage backend failed to complete a read or write."""
