"""Per-read abundance estimation against an indexed bank (the count tool).

The bank's solid k-mers are indexed in a quasi-dictionary and an 8-bit
saturating count table keyed by dictionary slot. A query read collects the
counts of all its indexed k-mers (overlaps included) and reports their
mean, median, min and max.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kmers import DEFAULT_MEMORY_BUDGET, count_solid_kmers, encode_reads
from .mphf import DEFAULT_GAMMA, DEFAULT_MASTER_SEED
from .quasidict import QuasiDictionary, create_quasi_dictionary
from .seqio import ReadRecord, read_batches

COUNT_SATURATION = 255
DEFAULT_BATCH_READS = 4096  # fixed so output is identical for any thread count


@dataclass
class AbundanceRecord:
    read_id: int
    n_kmers_considered: int
    mean: float
    median: int
    min: int
    max: int
    no_hit: bool

    def format(self) -> str:
        line = (
            f"{self.read_id}\t{self.n_kmers_considered}\t{self.mean:.2f}"
            f"\t{self.median}\t{self.min}\t{self.max}"
        )
        return line + "\t*" if self.no_hit else line


def build_count_table(qd: QuasiDictionary, solid_codes: np.ndarray, solid_counts: np.ndarray) -> np.ndarray:
    counts = np.zeros(qd.n_keys, dtype=np.uint8)
    if len(solid_codes):
        idx = qd.query_batch(solid_codes)
        counts[idx] = np.minimum(solid_counts, np.uint64(COUNT_SATURATION)).astype(np.uint8)
    return counts


def build_count_index(
    bank,
    k: int,
    t: int,
    f: int,
    gamma: float = DEFAULT_GAMMA,
    master_seed: int = DEFAULT_MASTER_SEED,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    tmp_dir: str | None = None,
) -> tuple[QuasiDictionary, np.ndarray]:
    """Index a bank (path or iterable of reads) for abundance queries."""
    solid = count_solid_kmers(bank, k, t, memory_budget=memory_budget, tmp_dir=tmp_dir)
    qd = create_quasi_dictionary(solid, f, gamma=gamma, master_seed=master_seed)
    return qd, build_count_table(qd, solid.codes, solid.counts)


def _records_from_batch(
    read_ids: list[int],
    hit_counts_per_read: list[np.ndarray],
) -> list[AbundanceRecord]:
    records = []
    for rid, hits in zip(read_ids, hit_counts_per_read):
        n = len(hits)
        if n == 0:
            records.append(AbundanceRecord(rid, 0, 0.0, 0, 0, 0, True))
        else:
            srt = np.sort(hits)
            records.append(
                AbundanceRecord(
                    rid,
                    n,
                    float(hits.mean()),
                    int(srt[n // 2]),  # upper median on even length
                    int(srt[0]),
                    int(srt[-1]),
                    False,
                )
            )
    return records


def estimate_batch(
    qd: QuasiDictionary, counts: np.ndarray, batch: list[ReadRecord]
) -> list[AbundanceRecord]:
    canon, _, ptr = encode_reads([r.sequence for r in batch], qd.k)
    idx = qd.query_batch(canon)
    hit = idx >= 0
    cv = np.zeros(len(idx), dtype=np.uint8)
    cv[hit] = counts[idx[hit]]
    per_read = [
        cv[ptr[r] : ptr[r + 1]][hit[ptr[r] : ptr[r + 1]]] for r in range(len(batch))
    ]
    return _records_from_batch([r.id for r in batch], per_read)


def estimate_read_abundance(
    qd: QuasiDictionary, counts: np.ndarray, read: ReadRecord
) -> AbundanceRecord:
    return estimate_batch(qd, counts, [read])[0]


def run_src_counter(
    bank_path: str | Path | None,
    query_path: str | Path,
    k: int,
    t: int,
    f: int,
    out_path: str | Path,
    threads: int = 1,
    gamma: float = DEFAULT_GAMMA,
    master_seed: int = DEFAULT_MASTER_SEED,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    tmp_dir: str | None = None,
    prebuilt: tuple[QuasiDictionary, np.ndarray] | None = None,
) -> None:
    """Stream query reads and write one abundance record per read, in order."""
    if prebuilt is not None:
        qd, counts = prebuilt
    else:
        qd, counts = build_count_index(
            bank_path, k, t, f,
            gamma=gamma, master_seed=master_seed,
            memory_budget=memory_budget, tmp_dir=tmp_dir,
        )

    batches = read_batches(query_path, DEFAULT_BATCH_READS)
    with open(out_path, "w") as out:
        out.write(
            f"# src count k={qd.k} t={t} f={qd.f} gamma={gamma} seed={master_seed} "
            f"N={qd.n_keys}\n"
        )
        out.write(f"# counts saturate at {COUNT_SATURATION}\n")
        out.write("# read_id\tn_kmers\tmean\tmedian\tmin\tmax\t(*: no indexed k-mer)\n")
        work = lambda batch: estimate_batch(qd, counts, batch)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for records in pool.map(work, batches):
                    out.writelines(rec.format() + "\n" for rec in records)
        else:
            for batch in batches:
                out.writelines(rec.format() + "\n" for rec in work(batch))
