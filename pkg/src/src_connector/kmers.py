"""Canonical k-mer encoding, enumeration and solid k-mer counting.

k-mers are 2-bit packed into uint64 codes (A=0, C=1, G=2, T=3, first base in
the most significant bit pair), so integer order equals lexicographic order
and the canonical form is a plain minimum with the reverse complement.
k is capped at 31 so a code always fits 62 bits.
"""

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .seqio import ReadRecord, open_reads

U64 = np.uint64

MAX_K = 31
INVALID = (1 << 64) - 1

DEFAULT_MEMORY_BUDGET = 4 << 30  # bytes of buffered k-mer codes before spilling

_BASES = "ACGT"
_CODE_OF = {"A": 0, "C": 1, "G": 2, "T": 3, "a": 0, "c": 1, "g": 2, "t": 3}

_CODE_LUT = np.full(256, 255, dtype=np.uint8)
for _b, _c in _CODE_OF.items():
    _CODE_LUT[ord(_b)] = _c

_M2 = U64(0x3333333333333333)
_M4 = U64(0x0F0F0F0F0F0F0F0F)


def _check_k(k: int) -> None:
    if not 1 <= k <= MAX_K:
        raise ValueError(f"k must be in [1, {MAX_K}], got {k}")


def encode_kmer(seq: str) -> int:
    """2-bit pack a k-base window; INVALID if any base is not ACGT."""
    code = 0
    for ch in seq:
        v = _CODE_OF.get(ch)
        if v is None:
            return INVALID
        code = (code << 2) | v
    return code


def decode_kmer(code: int, k: int) -> str:
    return "".join(_BASES[(code >> (2 * (k - 1 - p))) & 3] for p in range(k))


def reverse_complement(code: int, k: int) -> int:
    """Code of the reverse complement sequence."""
    x = code ^ ((1 << (2 * k)) - 1)  # flips both bits of a base: b -> 3-b
    x = ((x >> 2) & 0x3333333333333333) | ((x & 0x3333333333333333) << 2)
    x = ((x >> 4) & 0x0F0F0F0F0F0F0F0F) | ((x & 0x0F0F0F0F0F0F0F0F) << 4)
    x = int.from_bytes(x.to_bytes(8, "little"), "big")
    return x >> (64 - 2 * k)


def canonicalize(code: int, k: int) -> int:
    """The smaller of a code and its reverse complement code."""
    return min(code, reverse_complement(code, k))


def reverse_complement_batch(codes: np.ndarray, k: int) -> np.ndarray:
    x = codes ^ U64((1 << (2 * k)) - 1)
    x = ((x >> U64(2)) & _M2) | ((x & _M2) << U64(2))
    x = ((x >> U64(4)) & _M4) | ((x & _M4) << U64(4))
    x = x.byteswap()
    return x >> U64(64 - 2 * k)


def canonicalize_batch(codes: np.ndarray, k: int) -> np.ndarray:
    return np.minimum(codes, reverse_complement_batch(codes, k))


def _window_codes(vals: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Raw forward codes of every length-k window plus a validity mask.

    vals holds one 2-bit base value per character, 255 for non-ACGT.
    """
    n = vals.size
    m = n - k + 1
    if m <= 0:
        return np.empty(0, dtype=U64), np.empty(0, dtype=bool)

    v = vals.astype(U64)
    # window codes for power-of-two lengths, by doubling
    pows = {1: v}
    p = 1
    while p * 2 <= k:
        c = pows[p]
        c2 = np.zeros(n, dtype=U64)
        c2[: n - p] = (c[: n - p] << U64(2 * p)) | c[p:]
        pows[2 * p] = c2
        p *= 2

    acc = None
    acc_len = 0
    for p in sorted(pows, reverse=True):
        if not (k & p):
            continue
        piece = pows[p]
        if acc is None:
            acc = piece.copy()
        else:
            merged = np.zeros(n, dtype=U64)
            valid_n = n - acc_len
            merged[:valid_n] = (acc[:valid_n] << U64(2 * p)) | piece[acc_len : acc_len + valid_n]
            acc = merged
        acc_len += p

    codes = acc[:m]
    inv = np.concatenate(([0], np.cumsum(vals == 255, dtype=np.int64)))
    valid = (inv[k:] - inv[:-k]) == 0
    return codes, valid


def encode_reads(seqs: list[str], k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Encode a batch of reads into canonical window codes.

    Returns (canon_codes, window_positions, read_ptr) where read r's windows
    are canon_codes[read_ptr[r]:read_ptr[r+1]] at the in-read positions
    window_positions[...]. Windows containing non-ACGT bases are dropped
    without renumbering the surviving positions.
    """
    _check_k(k)
    if not seqs:
        empty = np.empty(0, dtype=np.int64)
        return np.empty(0, dtype=U64), empty, np.zeros(1, dtype=np.int64)

    joined = "N".join(seqs)
    data = np.frombuffer(joined.encode("latin-1"), dtype=np.uint8)
    vals = _CODE_LUT[data]
    codes, valid = _window_codes(vals, k)
    gvalid = np.flatnonzero(valid)
    canon = canonicalize_batch(codes[gvalid], k)

    lens = np.fromiter((len(s) for s in seqs), dtype=np.int64, count=len(seqs))
    starts = np.zeros(len(seqs) + 1, dtype=np.int64)
    np.cumsum(lens + 1, out=starts[1:])
    owner = np.searchsorted(starts, gvalid, side="right") - 1
    positions = gvalid - starts[owner]
    read_ptr = np.searchsorted(gvalid, starts).astype(np.int64)
    return canon, positions, read_ptr


def enumerate_kmers(read: ReadRecord, k: int) -> Iterator[tuple[int, int]]:
    """Yield (position, canonical code) for every ACGT-only window of a read."""
    canon, positions, _ = encode_reads([read.sequence], k)
    for pos, code in zip(positions.tolist(), canon.tolist()):
        yield pos, code


@dataclass(frozen=True)
class SolidKmerSet:
    """Canonical k-mers with occurrence count >= t, codes in ascending order."""

    k: int
    t: int
    codes: np.ndarray  # uint64, ascending
    counts: np.ndarray  # uint64, aligned with codes
    n_distinct_total: int  # distinct canonical k-mers seen, including non-solid

    @property
    def n(self) -> int:
        return len(self.codes)

    def entries(self) -> Iterator[tuple[int, int]]:
        for code, count in zip(self.codes.tolist(), self.counts.tolist()):
            yield code, count


def _run_lengths(sorted_codes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(sorted_codes) == 0:
        return sorted_codes, np.empty(0, dtype=np.uint64)
    change = np.empty(len(sorted_codes), dtype=bool)
    change[0] = True
    np.not_equal(sorted_codes[1:], sorted_codes[:-1], out=change[1:])
    starts = np.flatnonzero(change)
    uniq = sorted_codes[starts]
    counts = np.diff(np.append(starts, len(sorted_codes))).astype(np.uint64)
    return uniq, counts


class _Spill:
    """Temp-file partitions of k-mer codes, range-partitioned by high code bits
    so per-partition results concatenate back in ascending code order."""

    N_PARTITIONS = 64

    def __init__(self, k: int, tmp_dir: str | None):
        self.shift = U64(max(0, 2 * k - 6))
        self.dir = tempfile.TemporaryDirectory(prefix="kmer_spill_", dir=tmp_dir)
        self.files = [
            open(os.path.join(self.dir.name, f"part_{i:02d}.bin"), "wb")
            for i in range(self.N_PARTITIONS)
        ]

    def write(self, codes: np.ndarray) -> None:
        part = (codes >> self.shift).astype(np.int64)
        order = np.argsort(part, kind="stable")
        part = part[order]
        codes = codes[order]
        bounds = np.searchsorted(part, np.arange(self.N_PARTITIONS + 1))
        for i in range(self.N_PARTITIONS):
            lo, hi = bounds[i], bounds[i + 1]
            if hi > lo:
                self.files[i].write(codes[lo:hi].tobytes())

    def partitions(self) -> Iterator[np.ndarray]:
        for f in self.files:
            f.close()
        for i in range(self.N_PARTITIONS):
            path = os.path.join(self.dir.name, f"part_{i:02d}.bin")
            yield np.fromfile(path, dtype=U64)

    def cleanup(self) -> None:
        for f in self.files:
            if not f.closed:
                f.close()
        self.dir.cleanup()


def count_solid_kmers(
    reads: str | Path | Iterable[ReadRecord],
    k: int,
    t: int,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    tmp_dir: str | None = None,
    chunk_reads: int = 100_000,
) -> SolidKmerSet:
    """Exact canonical k-mer counting over a read set, keeping counts >= t.

    Codes are buffered in memory and spilled to range-partitioned temp files
    when the buffer would exceed memory_budget bytes.
    """
    _check_k(k)
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")

    if isinstance(reads, (str, Path)):
        records: Iterable[ReadRecord] = open_reads(reads)
    else:
        records = reads

    chunks: list[np.ndarray] = []
    buffered = 0
    spill: _Spill | None = None

    def flush_to_spill() -> None:
        nonlocal buffered
        for arr in chunks:
            spill.write(arr)
        chunks.clear()
        buffered = 0

    batch: list[str] = []

    def consume(seqs: list[str]) -> None:
        nonlocal buffered, spill
        canon, _, _ = encode_reads(seqs, k)
        if spill is not None:
            spill.write(canon)
            return
        chunks.append(canon)
        buffered += canon.nbytes
        if buffered > memory_budget:
            spill = _Spill(k, tmp_dir)
            flush_to_spill()

    for rec in records:
        batch.append(rec.sequence)
        if len(batch) >= chunk_reads:
            consume(batch)
            batch = []
    if batch:
        consume(batch)

    solid_codes: list[np.ndarray] = []
    solid_counts: list[np.ndarray] = []
    n_distinct = 0

    def absorb(codes: np.ndarray) -> None:
        nonlocal n_distinct
        codes.sort()
        uniq, counts = _run_lengths(codes)
        n_distinct += len(uniq)
        keep = counts >= np.uint64(t)
        solid_codes.append(uniq[keep])
        solid_counts.append(counts[keep])

    if spill is not None:
        try:
            for part in spill.partitions():
                absorb(part)
        finally:
            spill.cleanup()
    else:
        absorb(np.concatenate(chunks) if chunks else np.empty(0, dtype=U64))

    return SolidKmerSet(
        k=k,
        t=t,
        codes=np.concatenate(solid_codes) if solid_codes else np.empty(0, dtype=U64),
        counts=np.concatenate(solid_counts) if solid_counts else np.empty(0, dtype=np.uint64),
        n_distinct_total=n_distinct,
    )
