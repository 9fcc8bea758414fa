"""All-vs-all read similarity via non-overlapping shared k-mers (the link tool).

Each dictionary slot maps to the bank reads containing a k-mer with that
slot. A query read is scanned left to right; a shared k-mer at position i
counts for a target only if i is past the target's next free position,
which then advances by k. Targets below the --min-shared threshold are
dropped. The id table lives either in RAM (CSR layout) or in a temp file
of zero-terminated blocks (ids stored +1 so 0 terminates).
"""

import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kmers import DEFAULT_MEMORY_BUDGET, count_solid_kmers, encode_reads
from .mphf import DEFAULT_GAMMA, DEFAULT_MASTER_SEED
from .quasidict import QuasiDictionary, create_quasi_dictionary
from .seqio import ReadRecord, open_reads, read_batches

DEFAULT_MIN_SHARED = 2
DEFAULT_BATCH_READS = 1024
_SLOT_DTYPE = np.uint32  # 4-byte little-endian disk slots; caps bank at 2^32 - 2 reads


@dataclass
class MatchRecord:
    query_read_id: int
    matches: list[tuple[int, int]]  # (target read id, shared non-overlapping k-mers)

    def format(self) -> str:
        if not self.matches:
            return f"{self.query_read_id}:*"
        pairs = " ".join(f"{tid}-{cnt}" for tid, cnt in self.matches)
        return f"{self.query_read_id}: {pairs}"


def _bank_pairs(qd: QuasiDictionary, bank, batch_reads: int):
    """Yield (slot, read_id) arrays for every indexed k-mer occurrence."""
    if isinstance(bank, (str, Path)):
        batches = read_batches(bank, batch_reads)
    else:
        def _chunks():
            chunk = []
            for rec in bank:
                chunk.append(rec)
                if len(chunk) >= batch_reads:
                    yield chunk
                    chunk = []
            if chunk:
                yield chunk
        batches = _chunks()
    for batch in batches:
        canon, _, ptr = encode_reads([r.sequence for r in batch], qd.k)
        idx = qd.query_batch(canon)
        rids = np.repeat(
            np.fromiter((r.id for r in batch), dtype=np.int64, count=len(batch)),
            np.diff(ptr),
        )
        hit = idx >= 0
        yield idx[hit], rids[hit]


class ReadIdTable:
    """CSR table: slot -> ascending, deduplicated bank read ids."""

    def __init__(self, offsets: np.ndarray, ids: np.ndarray):
        self.offsets = offsets  # int64, n_slots + 1
        self.ids = ids  # int64

    @classmethod
    def build(cls, qd: QuasiDictionary, bank, batch_reads: int = 4096) -> "ReadIdTable":
        slots: list[np.ndarray] = []
        rids: list[np.ndarray] = []
        for s, r in _bank_pairs(qd, bank, batch_reads):
            slots.append(s)
            rids.append(r)
        if slots:
            slot = np.concatenate(slots)
            rid = np.concatenate(rids)
        else:
            slot = np.empty(0, dtype=np.int64)
            rid = np.empty(0, dtype=np.int64)
        del slots, rids
        order = np.lexsort((rid, slot))
        slot = slot[order]
        rid = rid[order]
        del order
        if len(slot):
            keep = np.empty(len(slot), dtype=bool)
            keep[0] = True
            keep[1:] = (slot[1:] != slot[:-1]) | (rid[1:] != rid[:-1])
            slot = slot[keep]
            rid = rid[keep]
        offsets = np.searchsorted(slot, np.arange(qd.n_keys + 1, dtype=np.int64))
        return cls(offsets.astype(np.int64), rid)

    def get(self, slot: int) -> np.ndarray:
        return self.ids[self.offsets[slot] : self.offsets[slot + 1]]

    @property
    def avg_ids_per_entry(self) -> float:
        n_slots = len(self.offsets) - 1
        return len(self.ids) / n_slots if n_slots else 0.0


class DiskIdTable:
    """Temp-file table: per slot, a zero-terminated block of 4-byte (id+1) values.

    Blocks may contain duplicate ids (one per k-mer occurrence); readers
    deduplicate. Keeps only one byte offset per slot in RAM.
    """

    def __init__(self, offsets: np.ndarray, path: str, owns_file: bool = True):
        self.offsets = offsets  # int64 slot offsets (in 4-byte slots), len n_slots
        self.path = path
        self._fh = open(path, "rb")
        self._owns = owns_file

    def get(self, slot: int) -> np.ndarray:
        """Raw (possibly duplicated) read ids of a block, in file order."""
        self._fh.seek(int(self.offsets[slot]) * 4)
        collected: list[np.ndarray] = []
        while True:
            chunk = np.frombuffer(self._fh.read(256), dtype=_SLOT_DTYPE)
            if len(chunk) == 0:
                raise IOError(f"{self.path}: unterminated id block for slot {slot}")
            zero = np.flatnonzero(chunk == 0)
            if len(zero):
                collected.append(chunk[: zero[0]])
                break
            collected.append(chunk)
        block = np.concatenate(collected) if len(collected) > 1 else collected[0]
        return block.astype(np.int64) - 1

    def close(self) -> None:
        self._fh.close()
        if self._owns and os.path.exists(self.path):
            os.unlink(self.path)


def _build_disk_table(
    qd: QuasiDictionary, bank, tmp_path: str, batch_reads: int = 4096
) -> DiskIdTable:
    n = qd.n_keys
    # pass 1: occurrences per slot, bank-side false positives included
    occ = np.zeros(n, dtype=np.int64)
    for slot, _ in _bank_pairs(qd, bank, batch_reads):
        np.add.at(occ, slot, 1)

    # pass 2: allocate zero-filled blocks of occ+1 slots each
    offsets = np.zeros(n, dtype=np.int64)
    if n:
        np.cumsum(occ[:-1] + 1, out=offsets[1:])
    total_slots = int(occ.sum()) + n
    with open(tmp_path, "wb") as fh:
        fh.truncate(total_slots * 4)

    # pass 3: rewrite each occurrence's id over the first free zero of its block
    if total_slots:
        mm = np.memmap(tmp_path, dtype=_SLOT_DTYPE, mode="r+", shape=(total_slots,))
        cursor = np.zeros(n, dtype=np.int64)
        for slot, rid in _bank_pairs(qd, bank, batch_reads):
            order = np.argsort(slot, kind="stable")
            slot_s = slot[order]
            rid_s = rid[order]
            if len(slot_s) == 0:
                continue
            grp_start = np.empty(len(slot_s), dtype=bool)
            grp_start[0] = True
            grp_start[1:] = slot_s[1:] != slot_s[:-1]
            starts = np.flatnonzero(grp_start)
            sizes = np.diff(np.append(starts, len(slot_s)))
            within = np.arange(len(slot_s), dtype=np.int64) - np.repeat(starts, sizes)
            target = offsets[slot_s] + cursor[slot_s] + within
            mm[target] = (rid_s + 1).astype(_SLOT_DTYPE)
            np.add.at(cursor, slot_s[starts], sizes)
        mm.flush()
        del mm
    return DiskIdTable(offsets, tmp_path)


def build_id_index(
    bank,
    k: int,
    t: int,
    f: int,
    gamma: float = DEFAULT_GAMMA,
    master_seed: int = DEFAULT_MASTER_SEED,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    tmp_dir: str | None = None,
) -> tuple[QuasiDictionary, ReadIdTable]:
    solid = count_solid_kmers(bank, k, t, memory_budget=memory_budget, tmp_dir=tmp_dir)
    qd = create_quasi_dictionary(solid, f, gamma=gamma, master_seed=master_seed)
    return qd, ReadIdTable.build(qd, bank)


def build_disk_id_index(
    bank,
    k: int,
    t: int,
    f: int,
    tmp_path: str | None = None,
    gamma: float = DEFAULT_GAMMA,
    master_seed: int = DEFAULT_MASTER_SEED,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    tmp_dir: str | None = None,
) -> tuple[QuasiDictionary, DiskIdTable]:
    solid = count_solid_kmers(bank, k, t, memory_budget=memory_budget, tmp_dir=tmp_dir)
    qd = create_quasi_dictionary(solid, f, gamma=gamma, master_seed=master_seed)
    if tmp_path is None:
        fd, tmp_path = tempfile.mkstemp(prefix="src_link_ids_", suffix=".bin", dir=tmp_dir)
        os.close(fd)
    return qd, _build_disk_table(qd, bank, tmp_path)


def _similarity(
    qd: QuasiDictionary,
    get_ids,
    read: ReadRecord,
    min_shared: int,
    exclude_self: bool,
) -> MatchRecord:
    canon, positions, _ = encode_reads([read.sequence], qd.k)
    idx = qd.query_batch(canon)
    k = qd.k
    targets: dict[int, list[int]] = {}
    for i, slot in zip(positions.tolist(), idx.tolist()):
        if slot < 0:
            continue
        for tid in get_ids(slot):
            state = targets.get(tid)
            if state is None:
                targets[tid] = [i + k, 1]
            elif i >= state[0]:
                state[0] = i + k
                state[1] += 1
    matches = sorted(
        (tid, state[1])
        for tid, state in targets.items()
        if state[1] >= min_shared and not (exclude_self and tid == read.id)
    )
    return MatchRecord(read.id, matches)


def query_read_similarity(
    qd: QuasiDictionary,
    ids: ReadIdTable,
    read: ReadRecord,
    min_shared: int = DEFAULT_MIN_SHARED,
    exclude_self: bool = False,
) -> MatchRecord:
    return _similarity(qd, lambda s: ids.get(s).tolist(), read, min_shared, exclude_self)


def query_disk(
    qd: QuasiDictionary,
    disk_ids: DiskIdTable,
    read: ReadRecord,
    min_shared: int = DEFAULT_MIN_SHARED,
    exclude_self: bool = False,
) -> MatchRecord:
    # disk blocks carry duplicates; dedup before the overlap logic
    return _similarity(
        qd,
        lambda s: np.unique(disk_ids.get(s)).tolist(),
        read,
        min_shared,
        exclude_self,
    )


def run_src_linker(
    bank_path: str | Path | None,
    query_path: str | Path,
    k: int,
    t: int,
    f: int,
    out_path: str | Path,
    min_shared: int = DEFAULT_MIN_SHARED,
    mode: str = "ram",
    threads: int = 1,
    no_self: bool = False,
    gamma: float = DEFAULT_GAMMA,
    master_seed: int = DEFAULT_MASTER_SEED,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    tmp_dir: str | None = None,
    prebuilt_qd: QuasiDictionary | None = None,
    sidecar_path: str | Path | None = None,
) -> None:
    """One MatchRecord line per query read, in input order."""
    if mode not in ("ram", "disk"):
        raise ValueError(f"mode must be 'ram' or 'disk', got {mode!r}")

    if prebuilt_qd is not None:
        qd = prebuilt_qd
    else:
        solid = count_solid_kmers(
            bank_path, k, t, memory_budget=memory_budget, tmp_dir=tmp_dir
        )
        qd = create_quasi_dictionary(solid, f, gamma=gamma, master_seed=master_seed)
        del solid

    disk_table = None
    try:
        if mode == "disk":
            fd, tmp_path = tempfile.mkstemp(
                prefix="src_link_ids_", suffix=".bin", dir=tmp_dir
            )
            os.close(fd)
            disk_table = _build_disk_table(qd, bank_path, tmp_path)
            query_one = lambda read: query_disk(
                qd, disk_table, read, min_shared, no_self
            )
        else:
            table = ReadIdTable.build(qd, bank_path)
            query_one = lambda read: query_read_similarity(
                qd, table, read, min_shared, no_self
            )

        def work(batch: list[ReadRecord]) -> list[str]:
            return [query_one(read).format() + "\n" for read in batch]

        batches = read_batches(query_path, DEFAULT_BATCH_READS)
        sidecar = open(sidecar_path, "w") if sidecar_path else None
        with open(out_path, "w") as out:
            out.write(
                f"# src link k={qd.k} t={t} f={qd.f} gamma={gamma} seed={master_seed} "
                f"min_shared={min_shared} mode={mode} N={qd.n_keys}\n"
            )
            out.write("# query_id: target_id-shared_kmers ... (*: no match)\n")
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    for lines in pool.map(work, batches):
                        out.writelines(lines)
            else:
                for batch in batches:
                    out.writelines(work(batch))
        if sidecar:
            for rec in open_reads(query_path):
                sidecar.write(f"{rec.id}\t{rec.header}\n")
            sidecar.close()
    finally:
        if disk_table is not None:
            disk_table.close()
