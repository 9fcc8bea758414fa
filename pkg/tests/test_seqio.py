import gzip

import pytest

from src_connector.seqio import (
    ReadRecord,
    SequenceFormatError,
    open_reads,
    read_batches,
)

FASTA = ">r0 first\nACGT\nACGT\n>r1\nTTTT\n"
FASTQ = "@r0 first\nACGTACGT\n+\nIIIIIIII\n@r1\nTTTT\n+r1\nIIII\n"


def test_multiline_fasta(tmp_path):
    path = tmp_path / "reads.fa"
    path.write_text(FASTA)
    records = list(open_reads(path))
    assert records == [
        ReadRecord(0, "ACGTACGT", "r0 first"),
        ReadRecord(1, "TTTT", "r1"),
    ]


def test_fastq(tmp_path):
    path = tmp_path / "reads.fq"
    path.write_text(FASTQ)
    records = list(open_reads(path))
    assert [r.sequence for r in records] == ["ACGTACGT", "TTTT"]
    assert [r.id for r in records] == [0, 1]


def test_gzip_matches_plain(tmp_path):
    plain = tmp_path / "reads.fq"
    plain.write_text(FASTQ)
    gz = tmp_path / "reads.fq.gz"
    with gzip.open(gz, "wt") as fh:
        fh.write(FASTQ)
    assert list(open_reads(gz)) == list(open_reads(plain))


def test_gzip_fasta(tmp_path):
    gz = tmp_path / "reads.fa.gz"
    with gzip.open(gz, "wt") as fh:
        fh.write(FASTA)
    assert [r.sequence for r in open_reads(gz)] == ["ACGTACGT", "TTTT"]


def test_unrecognized_format(tmp_path):
    path = tmp_path / "reads.txt"
    path.write_text("ACGT\nACGT\n")
    with pytest.raises(SequenceFormatError):
        open_reads(path)


def test_empty_file(tmp_path):
    path = tmp_path / "empty.fa"
    path.write_text("")
    assert list(open_reads(path)) == []


def test_fastq_at_sign_in_quality(tmp_path):
    # quality line starts with '@'; length matching must not treat it as a header
    path = tmp_path / "reads.fq"
    path.write_text("@r0\nACGT\n+\n@III\n@r1\nTT\n+\nII\n")
    records = list(open_reads(path))
    assert [r.sequence for r in records] == ["ACGT", "TT"]


def test_fastq_multiline_quality(tmp_path):
    path = tmp_path / "reads.fq"
    path.write_text("@r0\nACGTACGT\n+\nIIII\nIIII\n@r1\nTT\n+\nII\n")
    assert [r.sequence for r in open_reads(path)] == ["ACGTACGT", "TT"]


def test_crlf_equals_lf(tmp_path):
    lf = tmp_path / "lf.fa"
    lf.write_text(FASTA)
    crlf = tmp_path / "crlf.fa"
    crlf.write_text(FASTA.replace("\n", "\r\n"))
    assert list(open_reads(crlf)) == list(open_reads(lf))


def test_truncated_fastq(tmp_path):
    path = tmp_path / "reads.fq"
    path.write_text("@r0\nACGT\n+\nII\n")
    with pytest.raises(SequenceFormatError):
        list(open_reads(path))


def test_fastq_missing_plus(tmp_path):
    path = tmp_path / "reads.fq"
    path.write_text("@r0\nACGT\nIIII\n")
    with pytest.raises(SequenceFormatError):
        list(open_reads(path))


def test_ids_stable_across_passes(tmp_path):
    path = tmp_path / "reads.fa"
    path.write_text(FASTA)
    first = [(r.id, r.sequence) for r in open_reads(path)]
    second = [(r.id, r.sequence) for r in open_reads(path)]
    assert first == second


def test_read_batches(tmp_path):
    path = tmp_path / "reads.fa"
    with open(path, "w") as fh:
        for i in range(10):
            fh.write(f">r{i}\nACGT\n")
    batches = list(read_batches(path, 4))
    assert [len(b) for b in batches] == [4, 4, 2]
    assert [r.id for b in batches for r in b] == list(range(10))
