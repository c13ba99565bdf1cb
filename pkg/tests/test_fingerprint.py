import numpy as np
import pytest
from scipy import stats

from amqfilters.errors import InvalidWidth
from amqfilters.fingerprint import (
    Fingerprint,
    QuotientRemainder,
    hash_key,
    hash_to_fingerprint,
    hash_u64_array,
    join,
    split,
)


def test_hash_deterministic():
    assert hash_key(b"hello", 3) == hash_key(b"hello", 3)
    assert hash_to_fingerprint(b"hello", 40, 3) == hash_to_fingerprint(b"hello", 40, 3)


def test_hash_seed_and_key_sensitivity():
    assert hash_key(b"hello", 0) != hash_key(b"hello", 1)
    assert hash_key(b"hello", 0) != hash_key(b"hellp", 0)
    assert hash_key(b"", 0) != hash_key(b"\x00", 0)
    assert hash_key(b"\x00" * 8, 0) != hash_key(b"\x00" * 16, 0)


def test_width_one_fingerprint():
    for key in (b"a", b"b", b"c", b"0123456789"):
        assert hash_to_fingerprint(key, 1).value in (0, 1)


@pytest.mark.parametrize("p", [0, -1, 65, 100])
def test_invalid_widths_rejected(p):
    with pytest.raises(InvalidWidth):
        hash_to_fingerprint(b"x", p)


def test_fingerprint_value_range_checked():
    with pytest.raises(InvalidWidth):
        Fingerprint(4, 2)
    with pytest.raises(InvalidWidth):
        Fingerprint(-1, 8)
    Fingerprint(3, 2)


def test_bulk_hash_matches_bytes_path():
    rng = np.random.default_rng(0)
    keys = rng.integers(0, 1 << 64, size=500, dtype=np.uint64)
    for seed in (0, 1, 12345):
        bulk = hash_u64_array(keys, seed)
        for k, h in zip(keys, bulk):
            assert hash_key(int(k).to_bytes(8, "little"), seed) == int(h)


def test_fingerprint_takes_top_bits():
    h = hash_key(b"key", 7)
    for p in (1, 13, 37, 64):
        assert hash_to_fingerprint(b"key", p, 7).value == h >> (64 - p)


def test_uniformity_chi_square():
    # 1e6 keys at p=16 folded into 256 buckets; must pass at significance 0.001
    rng = np.random.default_rng(42)
    keys = rng.integers(0, 1 << 64, size=1_000_000, dtype=np.uint64)
    fps = hash_u64_array(keys, 0) >> np.uint64(48)
    buckets = np.bincount((fps >> np.uint64(8)).astype(np.int64), minlength=256)
    _, pvalue = stats.chisquare(buckets)
    assert pvalue > 0.001, f"chi-square p-value {pvalue}"


def test_split_examples():
    # zero, all-remainder, and hand-worked 0xAB cases
    assert split(Fingerprint(0, 8), 4) == QuotientRemainder(0, 0, 4, 4)
    assert split(Fingerprint(0xF, 8), 4) == QuotientRemainder(0, 0xF, 4, 4)
    qr = split(Fingerprint(0xAB, 8), 4)
    assert (qr.quotient, qr.remainder) == (0xA, 0xB)


def test_split_rejects_too_wide_remainder():
    with pytest.raises(InvalidWidth):
        split(Fingerprint(0, 8), 8)
    with pytest.raises(InvalidWidth):
        split(Fingerprint(0, 8), -1)


def test_join_examples():
    assert join(QuotientRemainder(0, 0, 4, 4)).value == 0
    assert join(QuotientRemainder(0xA, 0xB, 4, 4)).value == 0xAB


def test_join_split_roundtrip_exhaustive():
    # every fingerprint at p=12, r=5
    for v in range(1 << 12):
        f = Fingerprint(v, 12)
        assert join(split(f, 5)) == f


def test_split_monotone():
    rng = np.random.default_rng(1)
    p, r = 20, 7
    vals = np.sort(rng.integers(0, 1 << p, size=2000, dtype=np.uint64))
    prev = None
    for v in vals:
        qr = split(Fingerprint(int(v), p), r)
        cur = (qr.quotient, qr.remainder)
        if prev is not None:
            assert prev <= cur
        prev = cur
