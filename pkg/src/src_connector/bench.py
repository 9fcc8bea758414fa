"""Benchmark harness: quasi-dictionary vs an in-process hash map baseline.

Each structure is built and queried in its own spawned subprocess so peak
resident set size can be read per structure from the OS. The key file is
generated once by the parent and shared.
"""

import csv
import multiprocessing as mp
import os
import resource
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .kmers import MAX_K, SolidKmerSet, canonicalize_batch
from .mphf import DEFAULT_GAMMA, DEFAULT_MASTER_SEED
from .quasidict import create_quasi_dictionary

DEFAULT_SIZES = (10_000, 100_000, 1_000_000, 10_000_000)
DEFAULT_ALIENS = 1_000_000

CSV_COLUMNS = [
    "n_keys",
    "f",
    "structure",
    "build_s",
    "query_s",
    "peak_mem_bytes",
    "fp_rate",
    "build_cpu_s",
    "query_cpu_s",
]


def random_canonical_codes(n: int, k: int, seed: int) -> np.ndarray:
    """n distinct canonical k-mer codes, ascending."""
    rng = np.random.default_rng(seed)
    out = np.empty(0, dtype=np.uint64)
    while len(out) < n:
        draw = rng.integers(0, 1 << (2 * k), size=max(2 * n, 1024), dtype=np.uint64)
        out = np.unique(np.concatenate([out, canonicalize_batch(draw, k)]))
    return out[:n]


def make_disjoint_sets(
    n_keys: int, n_aliens: int, k: int = MAX_K, seed: int = 0xBEEF
) -> tuple[np.ndarray, np.ndarray]:
    """(keys, aliens): distinct canonical codes with no overlap."""
    pool = random_canonical_codes(n_keys + n_aliens, k, seed)
    rng = np.random.default_rng(seed ^ 0x5EED)
    perm = rng.permutation(len(pool))
    keys = np.sort(pool[perm[:n_keys]])
    aliens = np.sort(pool[perm[n_keys : n_keys + n_aliens]])
    return keys, aliens


def _peak_rss_bytes() -> int:
    """Per-process peak resident set size.

    /proc VmHWM is preferred: some container kernels report a machine-wide
    value through getrusage, which would poison cross-process comparisons.
    """
    try:
        with open("/proc/self/status") as fh:
            for line in fh:
                if line.startswith("VmHWM:"):
                    return int(line.split()[1]) * 1024  # kB
    except OSError:
        pass
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024  # KiB on Linux


def _load_keys(path: str) -> np.ndarray:
    return np.fromfile(path, dtype=np.uint64)


def bench_quasidict_worker(
    keys_path: str, aliens_path: str, k: int, f: int, gamma: float, seed: int
) -> dict:
    keys = _load_keys(keys_path)
    n = len(keys)
    counts = np.broadcast_to(np.uint64(1), n)  # stride-0 view, no allocation
    solid = SolidKmerSet(k, 1, keys, counts, n)
    w0, c0 = time.perf_counter(), time.process_time()
    qd = create_quasi_dictionary(solid, f, gamma=gamma, master_seed=seed)
    build_s, build_cpu = time.perf_counter() - w0, time.process_time() - c0

    probe = keys[: min(n, DEFAULT_ALIENS)]
    w0, c0 = time.perf_counter(), time.process_time()
    res = qd.query_batch(probe)
    query_s, query_cpu = time.perf_counter() - w0, time.process_time() - c0
    assert (res >= 0).all()

    aliens = _load_keys(aliens_path)
    fp_rate = float((qd.query_batch(aliens) >= 0).mean()) if len(aliens) else 0.0
    return {
        "build_s": build_s,
        "query_s": query_s,
        "build_cpu_s": build_cpu,
        "query_cpu_s": query_cpu,
        "fp_rate": fp_rate,
        "peak_mem_bytes": _peak_rss_bytes(),
        "bits_per_key": qd.size_bits() / n if n else 0.0,
        "payload_bits": qd.payload_bits,
        "mphf_bits_per_key": qd.mphf.size_bits() / n if n else 0.0,
    }


def bench_hashmap_worker(
    keys_path: str, aliens_path: str, k: int, f: int, gamma: float, seed: int
) -> dict:
    keys = _load_keys(keys_path)
    n = len(keys)
    w0, c0 = time.perf_counter(), time.process_time()
    table = dict(zip(keys.tolist(), range(n)))
    build_s, build_cpu = time.perf_counter() - w0, time.process_time() - c0

    probe = keys[: min(n, DEFAULT_ALIENS)].tolist()
    w0, c0 = time.perf_counter(), time.process_time()
    for key in probe:
        table[key]
    query_s, query_cpu = time.perf_counter() - w0, time.process_time() - c0

    aliens = _load_keys(aliens_path).tolist()
    n_fp = sum(1 for a in aliens if a in table)
    return {
        "build_s": build_s,
        "query_s": query_s,
        "build_cpu_s": build_cpu,
        "query_cpu_s": query_cpu,
        "fp_rate": n_fp / len(aliens) if aliens else 0.0,
        "peak_mem_bytes": _peak_rss_bytes(),
    }


def run_isolated(fn, *args):
    """Run fn(*args) in a fresh spawned process, so ru_maxrss is its own."""
    ctx = mp.get_context("spawn")
    with ProcessPoolExecutor(max_workers=1, mp_context=ctx) as pool:
        return pool.submit(fn, *args).result()


def run_bench(
    sizes=DEFAULT_SIZES,
    f: int = 12,
    k: int = MAX_K,
    gamma: float = DEFAULT_GAMMA,
    seed: int = DEFAULT_MASTER_SEED,
    n_aliens: int = DEFAULT_ALIENS,
    out_path: str | None = None,
    structures=("quasidict", "hashmap"),
) -> list[dict]:
    workers = {"quasidict": bench_quasidict_worker, "hashmap": bench_hashmap_worker}
    rows = []
    with tempfile.TemporaryDirectory(prefix="src_bench_") as tmp:
        for n in sizes:
            keys, aliens = make_disjoint_sets(n, n_aliens, k=k, seed=seed)
            keys_path = os.path.join(tmp, "keys.bin")
            aliens_path = os.path.join(tmp, "aliens.bin")
            keys.tofile(keys_path)
            aliens.tofile(aliens_path)
            del keys, aliens
            for structure in structures:
                stats = run_isolated(
                    workers[structure], keys_path, aliens_path, k, f, gamma, seed
                )
                row = {"n_keys": n, "f": f, "structure": structure}
                row.update(stats)
                rows.append(row)
    if out_path:
        with open(out_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
            writer.writeheader()
            writer.writerows(rows)
    return rows
