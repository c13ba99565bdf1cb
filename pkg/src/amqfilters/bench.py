"""Benchmark and verification workloads over the filter structures.

Keys are 64-bit integers drawn uniformly at random and hashed as their
8-byte little-endian encoding.  The insert stream is interleaved with
measurement checkpoints: every ``checkpoint_pct`` percent of insertions,
a block of uniform-random lookups (almost all absent) and a block of
successful lookups (keys sampled from those inserted) run, and counters
are snapshotted.  Lookup phases are fixed-size rather than time-boxed so
every non-timing output is a pure function of the seed.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace
from typing import IO, Optional

import numpy as np

from .bloom import BloomFilter
from .buffered import BufferedQuotientFilter
from .cascade import CascadeFilter
from .diskqf import qf_region_pages
from .errors import AmqError
from .fingerprint import Fingerprint, hash_u64_array
from .quotient import QfGeometry, QuotientFilter
from .storage import FilePageStore, IoCounters, PageStore, SimulatedPageStore

STRUCTURES = ("qf", "bf", "bqf", "cf")

CSV_COLUMNS = [
    "pct_complete",
    "inserts_done",
    "insert_ops_per_sec",
    "uniform_lookup_ops_per_sec",
    "successful_lookup_ops_per_sec",
    "measured_fp_rate",
    "page_reads",
    "page_writes",
    "sequential_reads",
    "random_reads",
    "sequential_writes",
    "random_writes",
    "level_loads",
]

#: Columns whose values depend on wall-clock time; everything else is a
#: deterministic function of the workload seed.
TIMING_COLUMNS = {
    "insert_ops_per_sec",
    "uniform_lookup_ops_per_sec",
    "successful_lookup_ops_per_sec",
}


class ConfigError(AmqError):
    """Invalid workload configuration (CLI exit code 2)."""


@dataclass
class WorkloadConfig:
    structure: str
    n_inserts: int
    q: int = 16
    r: int = 12
    p: int = 28
    fanout: int = 2
    buffer_slots: int = 4096
    max_load: float = 0.75
    seed: int = 0
    checkpoint_pct: int = 5
    lookups_per_checkpoint: int = 2000
    page_size: int = 4096
    store: str = "sim"

    def validate(self) -> None:
        if self.structure not in STRUCTURES:
            raise ConfigError(f"structure must be one of {STRUCTURES}")
        if self.n_inserts <= 0:
            raise ConfigError("n_inserts must be positive")
        if not (0 < self.max_load < 1):
            raise ConfigError("max_load must be in (0, 1)")
        if self.checkpoint_pct < 1 or 100 % self.checkpoint_pct != 0:
            raise ConfigError("checkpoint_pct must divide 100")
        if self.lookups_per_checkpoint < 0:
            raise ConfigError("lookups must be non-negative")
        if self.page_size < 64:
            raise ConfigError("page_size must be at least 64 bytes")
        if self.store != "sim" and not self.store.startswith("file:"):
            raise ConfigError("store must be 'sim' or 'file:PATH'")
        if self.structure in ("bqf", "cf"):
            if self.buffer_slots < 2 or self.buffer_slots & (self.buffer_slots - 1):
                raise ConfigError("buffer_slots must be a power of two >= 2")
            if not 1 <= self.p <= 64:
                raise ConfigError("p must be in [1, 64]")


@dataclass
class CheckpointRecord:
    pct_complete: int
    inserts_done: int
    insert_ops_per_sec: float
    uniform_lookup_ops_per_sec: float
    successful_lookup_ops_per_sec: float
    measured_fp_rate: float
    io: IoCounters
    level_loads: str = ""

    def row(self) -> list:
        return [
            self.pct_complete,
            self.inserts_done,
            f"{self.insert_ops_per_sec:.1f}",
            f"{self.uniform_lookup_ops_per_sec:.1f}",
            f"{self.successful_lookup_ops_per_sec:.1f}",
            repr(self.measured_fp_rate),
            self.io.page_reads,
            self.io.page_writes,
            self.io.sequential_reads,
            self.io.random_reads,
            self.io.sequential_writes,
            self.io.random_writes,
            self.level_loads,
        ]


@dataclass
class FpResult:
    fp_rate: float
    ci95: tuple[float, float]
    n_queries: int
    fill_count: int


@dataclass
class IoReport:
    checkpoints: list[tuple[int, int, IoCounters]] = field(default_factory=list)
    totals: IoCounters = field(default_factory=IoCounters)


# -- structure adapters ---------------------------------------------------


class _Target:
    """Uniform insert/lookup surface over the four structures."""

    store: Optional[PageStore] = None

    def insert_block(self, keys: np.ndarray) -> None:
        raise NotImplementedError

    def contains_block(self, keys: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def level_loads(self) -> str:
        return ""

    def counters(self) -> IoCounters:
        return self.store.counters.snapshot() if self.store else IoCounters()


class _QfTarget(_Target):
    def __init__(self, cfg: WorkloadConfig):
        geom = QfGeometry(cfg.q, cfg.r, _load_fraction(cfg.max_load))
        if geom.capacity < cfg.n_inserts:
            raise ConfigError(
                f"qf capacity {geom.capacity} < n_inserts {cfg.n_inserts}"
            )
        self.qf = QuotientFilter.from_geometry(geom)
        self.seed = cfg.seed
        self.shift = np.uint64(64 - geom.p)

    def insert_block(self, keys):
        self.qf.insert_values(hash_u64_array(keys, self.seed) >> self.shift)

    def contains_block(self, keys):
        return self.qf.contains_values(hash_u64_array(keys, self.seed) >> self.shift)


class _BfTarget(_Target):
    def __init__(self, cfg: WorkloadConfig):
        # for the Bloom baseline, q is the bit budget per element
        self.bf = BloomFilter(m=cfg.q * cfg.n_inserts, expected_n=cfg.n_inserts)

    def insert_block(self, keys):
        for k in keys:
            self.bf.insert(int(k).to_bytes(8, "little"))

    def contains_block(self, keys):
        return np.array(
            [self.bf.may_contain(int(k).to_bytes(8, "little")) for k in keys],
            dtype=np.bool_,
        )


class _FingerprintTarget(_Target):
    structure: object
    p: int
    seed: int

    def _fps(self, keys):
        return hash_u64_array(keys, self.seed) >> np.uint64(64 - self.p)

    def insert_block(self, keys):
        p = self.p
        for v in self._fps(keys):
            self.structure.insert(Fingerprint(int(v), p))

    def contains_block(self, keys):
        p = self.p
        return np.array(
            [self.structure.may_contain(Fingerprint(int(v), p)) for v in self._fps(keys)],
            dtype=np.bool_,
        )


class _BqfTarget(_FingerprintTarget):
    def __init__(self, cfg: WorkloadConfig):
        self.p = cfg.p
        self.seed = cfg.seed
        load = _load_fraction(cfg.max_load)
        buffer_q = cfg.buffer_slots.bit_length() - 1
        disk_q = _fit_quotient_bits(cfg.n_inserts, load)
        if disk_q >= cfg.p:
            raise ConfigError(
                f"p={cfg.p} too narrow for a store filter of 2^{disk_q} slots"
            )
        pages = 1 + 2 * qf_region_pages(disk_q, cfg.p - disk_q, cfg.page_size)
        self.store = _make_store(cfg, pages)
        self.structure = BufferedQuotientFilter(
            self.store, cfg.p, buffer_q, disk_q, load
        )


class _CfTarget(_FingerprintTarget):
    def __init__(self, cfg: WorkloadConfig):
        self.p = cfg.p
        self.seed = cfg.seed
        load = _load_fraction(cfg.max_load)
        q0 = cfg.buffer_slots.bit_length() - 1
        lb = cfg.fanout.bit_length() - 1
        cap0 = math.floor(load * cfg.buffer_slots)
        levels = 1
        while math.floor(load * (cfg.buffer_slots << (levels * lb))) < cfg.n_inserts:
            levels += 1
        if cfg.p - q0 - levels * lb < 1:
            raise ConfigError(
                f"p={cfg.p} too narrow for {levels} levels at fanout {cfg.fanout}"
            )
        pages = 1 + sum(
            2 * qf_region_pages(q0 + i * lb, cfg.p - q0 - i * lb, cfg.page_size)
            for i in range(1, levels + 1)
        )
        self.store = _make_store(cfg, pages)
        self.structure = CascadeFilter(
            self.store, cfg.p, q0, cfg.fanout, levels, load
        )

    def level_loads(self) -> str:
        return ";".join(
            f"{li.level}:{li.load:.6f}" for li in self.structure.level_info()
        )


def _load_fraction(value: float):
    from fractions import Fraction

    return Fraction(value).limit_denominator(255)


def _fit_quotient_bits(n: int, load) -> int:
    q = 1
    while math.floor(load * (1 << q)) < n:
        q += 1
    return q


def _make_store(cfg: WorkloadConfig, pages: int) -> PageStore:
    if cfg.store == "sim":
        return SimulatedPageStore(pages, cfg.page_size)
    return FilePageStore(cfg.store[len("file:") :], pages, cfg.page_size)


def build_target(cfg: WorkloadConfig) -> _Target:
    cfg.validate()
    return {
        "qf": _QfTarget,
        "bf": _BfTarget,
        "bqf": _BqfTarget,
        "cf": _CfTarget,
    }[cfg.structure](cfg)


# -- workloads --------------------------------------------------------------


def _key_streams(cfg: WorkloadConfig):
    seeds = np.random.SeedSequence(cfg.seed).spawn(3)
    return tuple(np.random.default_rng(s) for s in seeds)


def run_bench(cfg: WorkloadConfig) -> list[CheckpointRecord]:
    """Interleaved insert/lookup workload with per-checkpoint records."""
    target = build_target(cfg)
    insert_rng, uniform_rng, pick_rng = _key_streams(cfg)
    all_keys = insert_rng.integers(0, 1 << 64, size=cfg.n_inserts, dtype=np.uint64)
    inserted_set = set()
    records = []
    n_checkpoints = 100 // cfg.checkpoint_pct
    done = 0
    for ck in range(1, n_checkpoints + 1):
        upto = cfg.n_inserts * ck // n_checkpoints
        block = all_keys[done:upto]
        t0 = time.perf_counter()
        target.insert_block(block)
        dt_ins = time.perf_counter() - t0
        inserted_set.update(int(k) for k in block)
        done = upto

        nq = cfg.lookups_per_checkpoint
        uniform_keys = uniform_rng.integers(0, 1 << 64, size=nq, dtype=np.uint64)
        t0 = time.perf_counter()
        uniform_hits = target.contains_block(uniform_keys)
        dt_uni = time.perf_counter() - t0
        fresh = np.array(
            [int(k) not in inserted_set for k in uniform_keys], dtype=np.bool_
        )
        n_fresh = int(fresh.sum())
        fp_rate = float(uniform_hits[fresh].sum() / n_fresh) if n_fresh else 0.0

        success_keys = pick_rng.choice(all_keys[:done], size=nq, replace=True)
        t0 = time.perf_counter()
        success_hits = target.contains_block(success_keys)
        dt_suc = time.perf_counter() - t0
        if nq and not bool(success_hits.all()):
            raise AmqError("false negative on a successful lookup")

        records.append(
            CheckpointRecord(
                pct_complete=ck * cfg.checkpoint_pct,
                inserts_done=done,
                insert_ops_per_sec=len(block) / dt_ins if dt_ins > 0 else 0.0,
                uniform_lookup_ops_per_sec=nq / dt_uni if dt_uni > 0 else 0.0,
                successful_lookup_ops_per_sec=nq / dt_suc if dt_suc > 0 else 0.0,
                measured_fp_rate=fp_rate,
                io=target.counters(),
                level_loads=target.level_loads(),
            )
        )
    return records


def run_fp_test(cfg: WorkloadConfig, n_queries: int) -> FpResult:
    """Fill the structure to its design point, then measure the false
    positive rate over fresh uniform keys with a 95% binomial interval."""
    if n_queries <= 0:
        raise ConfigError("n_queries must be positive")
    if cfg.structure == "qf":
        fill = QfGeometry(cfg.q, cfg.r, _load_fraction(cfg.max_load)).capacity
        cfg = replace(cfg, n_inserts=fill)
    else:
        fill = cfg.n_inserts
    target = build_target(cfg)
    insert_rng, uniform_rng, _ = _key_streams(cfg)
    keys = insert_rng.integers(0, 1 << 64, size=fill, dtype=np.uint64)
    target.insert_block(keys)
    inserted = set(int(k) for k in keys)
    hits = 0
    total = 0
    block_size = 1 << 16
    remaining = n_queries
    while remaining > 0:
        block = uniform_rng.integers(
            0, 1 << 64, size=min(block_size, remaining), dtype=np.uint64
        )
        res = target.contains_block(block)
        for k, hit in zip(block, res):
            if int(k) in inserted:
                continue
            total += 1
            hits += bool(hit)
        remaining -= block.size
    rate = hits / total if total else 0.0
    half = 1.96 * math.sqrt(rate * (1 - rate) / total) if total else 0.0
    return FpResult(rate, (max(0.0, rate - half), rate + half), total, fill)


def run_io_report(cfg: WorkloadConfig) -> IoReport:
    """Insert-only workload on the simulated store; counter deltas per
    checkpoint."""
    if cfg.structure not in ("bqf", "cf"):
        raise ConfigError("io report supports only bqf and cf")
    if cfg.store != "sim":
        raise ConfigError("io report requires the simulated store")
    target = build_target(cfg)
    insert_rng, _, _ = _key_streams(cfg)
    all_keys = insert_rng.integers(0, 1 << 64, size=cfg.n_inserts, dtype=np.uint64)
    report = IoReport()
    n_checkpoints = 100 // cfg.checkpoint_pct
    done = 0
    prev = target.counters()
    for ck in range(1, n_checkpoints + 1):
        upto = cfg.n_inserts * ck // n_checkpoints
        target.insert_block(all_keys[done:upto])
        done = upto
        now = target.counters()
        report.checkpoints.append((ck * cfg.checkpoint_pct, done, now - prev))
        prev = now
    report.totals = target.counters()
    return report


def write_csv(records: list[CheckpointRecord], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(rec.row())


def write_io_csv(report: IoReport, fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(
        ["pct_complete", "inserts_done", "page_reads", "page_writes",
         "sequential_reads", "random_reads", "sequential_writes",
         "random_writes"]
    )
    for pct, done, delta in report.checkpoints:
        writer.writerow(
            [pct, done, delta.page_reads, delta.page_writes,
             delta.sequential_reads, delta.random_reads,
             delta.sequential_writes, delta.random_writes]
        )
    t = report.totals
    writer.writerow(
        ["total", "", t.page_reads, t.page_writes, t.sequential_reads,
         t.random_reads, t.sequential_writes, t.random_writes]
    )
