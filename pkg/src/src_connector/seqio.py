"""Streaming FASTA/FASTQ reading, plain or gzipped, with 0-based read ids."""

import gzip
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

GZIP_MAGIC = b"\x1f\x8b"


class SequenceFormatError(Exception):
    pass


@dataclass
class ReadRecord:
    id: int  # 0-based position in file order
    sequence: str
    header: str = ""


def _open_text(path: str | Path):
    raw = open(path, "rb")
    magic = raw.read(2)
    raw.seek(0)
    if magic == GZIP_MAGIC:
        return io.TextIOWrapper(gzip.GzipFile(fileobj=raw), encoding="latin-1")
    return io.TextIOWrapper(raw, encoding="latin-1")


class ReadStream:
    """Single-consumer iterator of ReadRecords; format auto-detected from the
    first byte ('>' FASTA, '@' FASTQ). Ids are consecutive from 0 and stable
    across re-opens of the same file."""

    def __init__(self, path: str | Path):
        self.path = str(path)
        self._fh = _open_text(path)
        first = self._fh.read(1)
        if first == ">":
            self.format = "fasta"
        elif first == "@":
            self.format = "fastq"
        elif first == "":
            self.format = "empty"
        else:
            self._fh.close()
            raise SequenceFormatError(
                f"{self.path}: unrecognized format (expected '>' or '@', got {first!r})"
            )
        self._fh.seek(0)
        self._line_no = 0

    def _readline(self) -> str:
        line = self._fh.readline()
        if line:
            self._line_no += 1
        return line

    def __iter__(self) -> Iterator[ReadRecord]:
        try:
            if self.format == "fasta":
                yield from self._iter_fasta()
            elif self.format == "fastq":
                yield from self._iter_fastq()
        finally:
            self._fh.close()

    def _iter_fasta(self) -> Iterator[ReadRecord]:
        header = None
        seq_parts: list[str] = []
        next_id = 0
        for line in iter(self._readline, ""):
            line = line.rstrip("\r\n")
            if line.startswith(">"):
                if header is not None:
                    yield ReadRecord(next_id, "".join(seq_parts), header)
                    next_id += 1
                header = line[1:]
                seq_parts = []
            elif line:
                seq_parts.append(line)
        if header is not None:
            yield ReadRecord(next_id, "".join(seq_parts), header)

    def _iter_fastq(self) -> Iterator[ReadRecord]:
        next_id = 0
        while True:
            header = self._readline()
            if not header:
                return
            header = header.rstrip("\r\n")
            if not header.startswith("@"):
                raise SequenceFormatError(
                    f"{self.path}:{self._line_no}: expected '@' record header"
                )
            seq = self._readline().rstrip("\r\n")
            plus = self._readline()
            if not plus.startswith("+"):
                raise SequenceFormatError(
                    f"{self.path}:{self._line_no}: expected '+' separator line"
                )
            # quality may contain '@' or '+': match it to the sequence length
            qual = ""
            while len(qual) < len(seq):
                qline = self._readline()
                if not qline:
                    raise SequenceFormatError(
                        f"{self.path}:{self._line_no}: truncated quality for read {next_id}"
                    )
                qual += qline.rstrip("\r\n")
            if len(qual) != len(seq):
                raise SequenceFormatError(
                    f"{self.path}:{self._line_no}: quality/sequence length mismatch "
                    f"for read {next_id}"
                )
            yield ReadRecord(next_id, seq, header[1:])
            next_id += 1


def open_reads(path: str | Path) -> ReadStream:
    return ReadStream(path)


def read_batches(path: str | Path, batch_size: int) -> Iterator[list[ReadRecord]]:
    """Fixed-size batches of reads; boundaries depend only on batch_size."""
    batch: list[ReadRecord] = []
    for rec in open_reads(path):
        batch.append(rec)
        if len(batch) >= batch_size:
            yield batch
            batch = []
    if batch:
        yield batch
