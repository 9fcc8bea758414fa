import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src_connector.kmers import (
    INVALID,
    SolidKmerSet,
    canonicalize,
    canonicalize_batch,
    count_solid_kmers,
    decode_kmer,
    encode_kmer,
    encode_reads,
    enumerate_kmers,
    reverse_complement,
    reverse_complement_batch,
)
from src_connector.seqio import ReadRecord

from _datagen import random_reads
from _oracles import canon_str, count_kmers, kmer_windows, revcomp_str


def test_encode_examples():
    assert encode_kmer("AC") == 0b0001
    assert encode_kmer("TT") == 0b1111
    assert encode_kmer("AN") == INVALID
    assert encode_kmer("ac") == 0b0001  # lowercase accepted


def test_decode_roundtrip():
    assert decode_kmer(encode_kmer("GATTACA"), 7) == "GATTACA"


def test_reverse_complement_examples():
    k = 4
    assert reverse_complement(encode_kmer("ACGT"), k) == encode_kmer("ACGT")
    assert reverse_complement(encode_kmer("AAAA"), k) == encode_kmer("TTTT")
    assert reverse_complement(encode_kmer("AACG"), k) == encode_kmer("CGTT")


def test_canonicalize_examples():
    assert canonicalize(encode_kmer("TTTT"), 4) == encode_kmer("AAAA")
    assert canonicalize(encode_kmer("ACGT"), 4) == encode_kmer("ACGT")
    assert canonicalize(encode_kmer("AACG"), 4) == encode_kmer("AACG")


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
def test_revcomp_involution_exhaustive(k):
    codes = np.arange(4**k, dtype=np.uint64)
    rc = reverse_complement_batch(codes, k)
    assert (reverse_complement_batch(rc, k) == codes).all()
    canon = canonicalize_batch(codes, k)
    assert (canonicalize_batch(canon, k) == canon).all()  # idempotent
    # batch matches the string oracle
    for code in codes[: min(len(codes), 256)].tolist():
        assert decode_kmer(int(rc[code]), k) == revcomp_str(decode_kmer(code, k))


@given(st.integers(min_value=7, max_value=31), st.data())
@settings(max_examples=50, deadline=None)
def test_revcomp_involution_random(k, data):
    code = data.draw(st.integers(min_value=0, max_value=4**k - 1))
    assert reverse_complement(reverse_complement(code, k), k) == code
    assert canonicalize(canonicalize(code, k), k) == canonicalize(code, k)
    assert decode_kmer(reverse_complement(code, k), k) == revcomp_str(decode_kmer(code, k))


def test_enumerate_examples():
    aaa = encode_kmer("AAA")
    assert list(enumerate_kmers(ReadRecord(0, "AAAAA"), 3)) == [(0, aaa), (1, aaa), (2, aaa)]
    aa = encode_kmer("AA")
    assert list(enumerate_kmers(ReadRecord(0, "AANAA"), 2)) == [(0, aa), (3, aa)]
    assert list(enumerate_kmers(ReadRecord(0, "AC"), 3)) == []


def test_enumerate_matches_string_oracle():
    rng = np.random.default_rng(3)
    for seq in random_reads(rng, 20, 80):
        # poke some invalid characters in
        seq = seq[:10] + "N" + seq[11:40] + "x" + seq[41:]
        for k in (2, 5, 31):
            got = [
                (pos, decode_kmer(code, k))
                for pos, code in enumerate_kmers(ReadRecord(0, seq), k)
            ]
            assert got == kmer_windows(seq, k)


def _solid_as_dict(solid: SolidKmerSet) -> dict[str, int]:
    return {decode_kmer(c, solid.k): int(n) for c, n in solid.entries()}


def test_count_solid_worked_example():
    bank = [ReadRecord(0, "AAAAC"), ReadRecord(1, "AAACA")]
    solid = count_solid_kmers(bank, 4, 1)
    assert _solid_as_dict(solid) == {"AAAA": 1, "AAAC": 2, "AACA": 1}
    assert solid.n == 3 and solid.n_distinct_total == 3

    solid2 = count_solid_kmers(bank, 4, 2)
    assert _solid_as_dict(solid2) == {"AAAC": 2}
    assert solid2.n_distinct_total == 3


def test_count_solid_empty(tmp_path):
    path = tmp_path / "empty.fa"
    path.write_text("")
    solid = count_solid_kmers(path, 31, 1)
    assert solid.n == 0 and solid.n_distinct_total == 0


def test_count_total_equals_window_count():
    rng = np.random.default_rng(11)
    seqs = random_reads(rng, 50, 120)
    k = 9
    solid = count_solid_kmers([ReadRecord(i, s) for i, s in enumerate(seqs)], k, 1)
    n_windows = sum(len(kmer_windows(s, k)) for s in seqs)
    assert int(solid.counts.sum()) == n_windows


def test_count_matches_naive_oracle():
    rng = np.random.default_rng(5)
    seqs = random_reads(rng, 100, 90)
    seqs += seqs[:30]  # repeats
    seqs[0] = seqs[0][:20] + "N" + seqs[0][21:]
    seqs[1] = seqs[1].lower()
    for k, t in [(7, 1), (7, 2), (31, 1)]:
        solid = count_solid_kmers([ReadRecord(i, s) for i, s in enumerate(seqs)], k, t)
        expect = {km: c for km, c in count_kmers(seqs, k).items() if c >= t}
        assert _solid_as_dict(solid) == expect
        # ascending code order
        assert (np.diff(solid.codes.astype(np.int64)) > 0).all() if solid.n > 1 else True


def test_spill_path_matches_in_memory(tmp_path):
    rng = np.random.default_rng(8)
    seqs = random_reads(rng, 300, 100) * 2
    reads = [ReadRecord(i, s) for i, s in enumerate(seqs)]
    in_mem = count_solid_kmers(reads, 15, 2)
    spilled = count_solid_kmers(
        reads, 15, 2, memory_budget=4096, tmp_dir=str(tmp_path), chunk_reads=50
    )
    assert (in_mem.codes == spilled.codes).all()
    assert (in_mem.counts == spilled.counts).all()
    assert in_mem.n_distinct_total == spilled.n_distinct_total


def test_invalid_parameters():
    with pytest.raises(ValueError):
        count_solid_kmers([], 32, 1)
    with pytest.raises(ValueError):
        count_solid_kmers([], 31, 0)


def test_encode_reads_boundaries():
    canon, pos, ptr = encode_reads(["AAAAA", "AC", "GGG"], 3)
    # read 0: 3 windows, read 1: too short, read 2: one window
    assert ptr.tolist() == [0, 3, 3, 4]
    assert pos.tolist() == [0, 1, 2, 0]
    assert decode_kmer(int(canon[3]), 3) == canon_str("GGG")
