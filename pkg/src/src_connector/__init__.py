"""Resource-frugal probabilistic k-mer dictionary with count and link tools."""

__version__ = "0.1.0"

from .kmers import (
    INVALID,
    MAX_K,
    SolidKmerSet,
    canonicalize,
    count_solid_kmers,
    encode_kmer,
    enumerate_kmers,
    reverse_complement,
)
from .mphf import NOT_FOUND, Mphf, build_mphf, mphf_query
from .quasidict import (
    NOT_INDEXED,
    QuasiDictionary,
    create_quasi_dictionary,
    fingerprint,
    load_index,
    save_index,
)
from .counter import AbundanceRecord, build_count_index, estimate_read_abundance, run_src_counter
from .linker import (
    DiskIdTable,
    MatchRecord,
    ReadIdTable,
    build_disk_id_index,
    build_id_index,
    query_disk,
    query_read_similarity,
    run_src_linker,
)
from .seqio import ReadRecord, ReadStream, open_reads

__all__ = [
    "INVALID",
    "MAX_K",
    "NOT_FOUND",
    "NOT_INDEXED",
    "AbundanceRecord",
    "DiskIdTable",
    "MatchRecord",
    "Mphf",
    "QuasiDictionary",
    "ReadIdTable",
    "ReadRecord",
    "ReadStream",
    "SolidKmerSet",
    "build_count_index",
    "build_disk_id_index",
    "build_id_index",
    "build_mphf",
    "canonicalize",
    "count_solid_kmers",
    "create_quasi_dictionary",
    "encode_kmer",
    "enumerate_kmers",
    "estimate_read_abundance",
    "fingerprint",
    "load_index",
    "mphf_query",
    "open_reads",
    "query_disk",
    "query_read_similarity",
    "reverse_complement",
    "run_src_counter",
    "run_src_linker",
    "save_index",
]
