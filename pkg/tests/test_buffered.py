import numpy as np
import pytest

from amqfilters.buffered import BufferedQuotientFilter
from amqfilters.diskqf import deserialize_qf
from amqfilters.errors import DeleteAbsent, FilterFull, InvalidGeometry
from amqfilters.fingerprint import Fingerprint
from amqfilters.quotient import QuotientFilter
from amqfilters.storage import SimulatedPageStore

P = 26


def make_bqf(buffer_q=8, disk_q=13, pages=200, page_size=4096):
    store = SimulatedPageStore(pages, page_size)
    return BufferedQuotientFilter(store, P, buffer_q, disk_q), store


def random_fps(n, seed):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 1 << P, size=n, dtype=np.uint64)


class TestConstruction:
    def test_store_too_small(self):
        store = SimulatedPageStore(4)
        with pytest.raises(InvalidGeometry):
            BufferedQuotientFilter(store, P, 8, 13)

    def test_widths_validated(self):
        store = SimulatedPageStore(64)
        with pytest.raises(InvalidGeometry):
            BufferedQuotientFilter(store, 10, 8, 10)  # disk r would be 0


class TestFlushArithmetic:
    def test_no_data_writes_below_buffer_capacity(self):
        bqf, store = make_bqf()
        writes_at_start = store.counters.page_writes  # superblock only
        for v in random_fps(bqf.buffer_capacity - 1, 1):
            bqf.insert(Fingerprint(int(v), P))
        assert store.counters.page_writes == writes_at_start
        assert bqf.flush_count == 0

    def test_filling_buffer_exactly_triggers_one_flush(self):
        bqf, store = make_bqf()
        before = store.counters.page_writes
        for v in random_fps(bqf.buffer_capacity, 2):
            bqf.insert(Fingerprint(int(v), P))
        assert bqf.flush_count == 1
        assert bqf.ram.count == 0
        # region (header + data pages) plus the superblock flip
        assert store.counters.page_writes - before == bqf.region_pages + 1

    def test_four_buffers_make_four_flushes(self):
        bqf, store = make_bqf()
        n = 4 * bqf.buffer_capacity
        for v in random_fps(n, 3):
            bqf.insert(Fingerprint(int(v), P))
        assert bqf.flush_count == 4
        assert bqf.count == n
        assert bqf.disk_count == n

    def test_empty_flush_is_noop(self):
        bqf, store = make_bqf()
        before = store.counters.snapshot()
        bqf.flush()
        assert store.counters.snapshot() == before

    def test_flush_data_writes_sequential(self):
        bqf, store = make_bqf()
        fps = random_fps(3 * bqf.buffer_capacity, 4)
        done = 0
        for v in fps:
            before = store.counters.snapshot()
            flushes = bqf.flush_count
            bqf.insert(Fingerprint(int(v), P))
            if bqf.flush_count > flushes:
                delta = store.counters - before
                # region pages land back to back; the only possible jumps
                # are the first region page and the superblock flip
                assert delta.page_writes == bqf.region_pages + 1
                assert delta.random_writes <= 2
                assert delta.sequential_writes >= bqf.region_pages - 1
                done += 1
        assert done == 3

    def test_flush_merges_buffer_into_store(self):
        bqf, store = make_bqf()
        fps = random_fps(2 * bqf.buffer_capacity, 5)
        for v in fps:
            bqf.insert(Fingerprint(int(v), P))
        on_disk = deserialize_qf(store, bqf.live_base).decode()
        assert on_disk.tolist() == sorted(int(v) for v in fps)

    def test_regions_alternate(self):
        bqf, store = make_bqf()
        bases = []
        for v in random_fps(3 * bqf.buffer_capacity, 6):
            bqf.insert(Fingerprint(int(v), P))
            if len(bases) < bqf.flush_count:
                bases.append(bqf.live_base)
        assert bases[0] != bases[1] and bases[1] != bases[2] and bases[0] == bases[2]

    def test_capacity_exhaustion(self):
        store = SimulatedPageStore(16)
        bqf = BufferedQuotientFilter(store, 20, 4, 6)
        cap = bqf.disk_capacity
        for v in range(cap):
            bqf.insert(Fingerprint(v, 20))
        with pytest.raises(FilterFull):
            bqf.insert(Fingerprint(cap, 20))


class TestLookups:
    def test_buffer_resident_lookup_is_free(self):
        bqf, store = make_bqf()
        bqf.insert(Fingerprint(123, P))
        before = store.counters.page_reads
        assert bqf.may_contain(Fingerprint(123, P))
        assert store.counters.page_reads == before

    def test_absent_with_unoccupied_bucket_is_one_read(self):
        bqf, store = make_bqf(buffer_q=10, disk_q=13)
        fps = random_fps(2 * bqf.buffer_capacity, 7)
        for v in fps:
            bqf.insert(Fingerprint(int(v), P))
        disk = deserialize_qf(store, bqf.live_base)
        rng = np.random.default_rng(8)
        checked = 0
        while checked < 30:
            v = int(rng.integers(0, 1 << P))
            if disk._meta[v >> disk.r] & 1 or bqf.ram._contains_value(v):
                continue
            before = store.counters.page_reads
            assert not bqf.may_contain(Fingerprint(v, P))
            assert store.counters.page_reads - before <= 1
            checked += 1

    def test_oracle_equivalence_with_monolithic_filter(self):
        bqf, store = make_bqf()
        ref = QuotientFilter(14, P - 14)
        fps = random_fps(3 * bqf.buffer_capacity + 17, 9)
        for v in fps:
            bqf.insert(Fingerprint(int(v), P))
            ref.insert(Fingerprint(int(v), P))
        rng = np.random.default_rng(10)
        uniform = rng.integers(0, 1 << P, size=20_000, dtype=np.uint64)
        sampled = rng.choice(fps, size=5_000)
        queries = np.concatenate([uniform, sampled])
        want = ref.contains_values(queries)
        for v, w in zip(queries, want):
            assert bqf.may_contain(Fingerprint(int(v), P)) == bool(w)

    def test_lookup_io_bound(self):
        bqf, store = make_bqf(buffer_q=10, disk_q=14)
        for v in random_fps(6 * bqf.buffer_capacity, 11):
            bqf.insert(Fingerprint(int(v), P))
        rng = np.random.default_rng(12)
        reads = []
        for v in rng.integers(0, 1 << P, size=5_000, dtype=np.uint64):
            before = store.counters.page_reads
            bqf.may_contain(Fingerprint(int(v), P))
            reads.append(store.counters.page_reads - before)
        reads = np.array(reads)
        assert (reads <= 2).mean() >= 0.99


class TestDeletes:
    def test_buffer_resident_delete_is_free(self):
        bqf, store = make_bqf()
        bqf.insert(Fingerprint(55, P))
        before = store.counters.snapshot()
        bqf.delete(Fingerprint(55, P))
        now = store.counters.snapshot()
        assert (now.page_reads, now.page_writes) == (
            before.page_reads, before.page_writes
        )
        assert not bqf.may_contain(Fingerprint(55, P))

    def test_store_resident_delete_is_cluster_local(self):
        bqf, store = make_bqf(buffer_q=10, disk_q=13)
        fps = random_fps(2 * bqf.buffer_capacity, 13)
        for v in fps:
            bqf.insert(Fingerprint(int(v), P))
        rng = np.random.default_rng(14)
        victims = rng.choice(fps[: bqf.disk_count], size=100, replace=False)
        for v in victims:
            if bqf.ram._contains_value(int(v)):
                continue
            before = store.counters.snapshot()
            bqf.delete(Fingerprint(int(v), P))
            delta = store.counters - before
            assert delta.page_reads <= 3 and delta.page_writes <= 3

    def test_delete_absent(self):
        bqf, _ = make_bqf()
        with pytest.raises(DeleteAbsent):
            bqf.delete(Fingerprint(1, P))
        for v in random_fps(2 * bqf.buffer_capacity, 15):
            bqf.insert(Fingerprint(int(v), P))
        present = set(int(v) for v in random_fps(2 * bqf.buffer_capacity, 15))
        rng = np.random.default_rng(16)
        absent = next(int(v) for v in rng.integers(0, 1 << P, size=100, dtype=np.uint64)
                      if int(v) not in present)
        with pytest.raises(DeleteAbsent):
            bqf.delete(Fingerprint(absent, P))

    def test_mixed_ops_match_shadow(self):
        bqf, _ = make_bqf()
        rng = np.random.default_rng(17)
        shadow = []
        for _ in range(4000):
            roll = rng.random()
            if roll < 0.55 or not shadow:
                v = int(rng.integers(0, 1 << P))
                bqf.insert(Fingerprint(v, P))
                shadow.append(v)
            elif roll < 0.8:
                v = shadow.pop(int(rng.integers(0, len(shadow))))
                bqf.delete(Fingerprint(v, P))
            else:
                v = int(rng.integers(0, 1 << P))
                assert bqf.may_contain(Fingerprint(v, P)) == (v in shadow)
        assert bqf.count == len(shadow)
        bqf.flush()
        on_disk = deserialize_qf(bqf.store, bqf.live_base).decode()
        assert on_disk.tolist() == sorted(shadow)
