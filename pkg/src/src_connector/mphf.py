"""Minimal perfect hash over a static set of 64-bit keys.

Construction cascades bit levels: at each level every remaining key hashes to
a slot; slots hit exactly once are marked occupied and their key is settled,
slots hit more than once are marked collided and their keys move down a level.
Survivors after max_levels land in a small exact fallback map.

A query walks the levels: occupied slot -> rank gives the index, collided
slot -> try the next level, empty slot -> NOT_FOUND. Keys outside the build
set therefore get rejected whenever they probe an empty slot, which at
gamma=2 happens for well over half of them.
"""

import math
import struct
from dataclasses import dataclass

import numpy as np

from .bitpack import bits_from_bool, build_rank_blocks, get_bits, rank1

U64 = np.uint64

NOT_FOUND = -1
DEFAULT_GAMMA = 2.0
DEFAULT_MASTER_SEED = 1337
DEFAULT_MAX_LEVELS = 32

MAGIC = b"QDMPHF01"

_MIX_C1 = 0xFF51AFD7ED558CCD
_MIX_C2 = 0xC4CEB9FE1A85EC53
_GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


class MphfError(Exception):
    pass


class MphfFormatError(MphfError):
    pass


def mix64(x: int) -> int:
    """64-bit avalanche (murmur3 finalizer); the scalar twin of mix64_batch."""
    x &= _MASK64
    x ^= x >> 33
    x = (x * _MIX_C1) & _MASK64
    x ^= x >> 33
    x = (x * _MIX_C2) & _MASK64
    x ^= x >> 33
    return x


def mix64_batch(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    x ^= x >> U64(33)
    x *= U64(_MIX_C1)
    x ^= x >> U64(33)
    x *= U64(_MIX_C2)
    x ^= x >> U64(33)
    return x


def level_seed(master_seed: int, level: int) -> int:
    return mix64((master_seed + (level + 1) * _GOLDEN) & _MASK64)


@dataclass
class _Level:
    size: int  # slots
    seed: int
    occupied: np.ndarray  # bitvector: settled slots
    collided: np.ndarray  # bitvector: slots hit by >= 2 keys
    rank_blocks: np.ndarray  # exclusive cumulative popcount of occupied
    index_offset: int  # indices assigned by earlier levels

    def bits(self) -> int:
        return 64 * (len(self.occupied) + len(self.collided) + len(self.rank_blocks))


class Mphf:
    """Immutable after construction; safe for concurrent queries."""

    def __init__(
        self,
        n_keys: int,
        gamma: float,
        master_seed: int,
        levels: list[_Level],
        fallback: dict[int, int],
    ):
        self.n_keys = n_keys
        self.gamma = gamma
        self.master_seed = master_seed
        self.levels = levels
        self.fallback = fallback

    @classmethod
    def build(
        cls,
        keys: np.ndarray,
        gamma: float = DEFAULT_GAMMA,
        master_seed: int = DEFAULT_MASTER_SEED,
        max_levels: int = DEFAULT_MAX_LEVELS,
    ) -> "Mphf":
        if gamma <= 1.0:
            raise ValueError(f"gamma must be > 1, got {gamma}")
        keys = np.asarray(keys, dtype=U64)
        if len(keys) > 1:
            # callers usually pass ascending codes; avoid the sort copy then
            srt = keys if (keys[1:] >= keys[:-1]).all() else np.sort(keys)
            if (srt[1:] == srt[:-1]).any():
                raise MphfError("duplicate keys in MPHF construction set")
            del srt

        chunk = 1 << 21  # keys processed per pass; bounds peak memory at large N
        levels: list[_Level] = []
        remaining = keys
        offset = 0
        for lvl in range(max_levels):
            if len(remaining) == 0:
                break
            size = max(math.ceil(gamma * len(remaining)), 1)
            seed = level_seed(master_seed, lvl)
            counts = np.zeros(size, dtype=np.uint16)
            for lo in range(0, len(remaining), chunk):
                part = remaining[lo : lo + chunk]
                pos = (mix64_batch(part ^ U64(seed)) % U64(size)).astype(np.int64)
                np.add.at(counts, pos, 1)

            occupied = bits_from_bool(counts == 1)
            collided = bits_from_bool(counts > 1)
            levels.append(
                _Level(size, seed, occupied, collided, build_rank_blocks(occupied), offset)
            )
            offset += int((counts == 1).sum())

            survivors = []
            for lo in range(0, len(remaining), chunk):
                part = remaining[lo : lo + chunk]
                pos = (mix64_batch(part ^ U64(seed)) % U64(size)).astype(np.int64)
                survivors.append(part[counts[pos] > 1])
            remaining = (
                np.concatenate(survivors) if survivors else np.empty(0, dtype=U64)
            )
            del counts

        fallback = {int(key): offset + j for j, key in enumerate(remaining.tolist())}
        return cls(len(keys), gamma, master_seed, levels, fallback)

    def query_batch(self, keys: np.ndarray) -> np.ndarray:
        """Index in [0, n_keys-1] per key, NOT_FOUND (-1) for rejected aliens."""
        keys = np.asarray(keys, dtype=U64)
        res = np.full(len(keys), NOT_FOUND, dtype=np.int64)
        active_idx = np.arange(len(keys), dtype=np.int64)
        active_keys = keys
        for level in self.levels:
            if len(active_idx) == 0:
                return res
            pos = (mix64_batch(active_keys ^ U64(level.seed)) % U64(level.size)).astype(
                np.int64
            )
            hit = get_bits(level.occupied, pos)
            if hit.any():
                res[active_idx[hit]] = level.index_offset + rank1(
                    level.occupied, level.rank_blocks, pos[hit]
                )
            cont = ~hit & get_bits(level.collided, pos)
            active_idx = active_idx[cont]
            active_keys = active_keys[cont]
        for i, key in zip(active_idx.tolist(), active_keys.tolist()):
            res[i] = self.fallback.get(key, NOT_FOUND)
        return res

    def query(self, key: int) -> int:
        for level in self.levels:
            pos = mix64(key ^ level.seed) % level.size
            word = int(level.occupied[pos >> 6])
            if (word >> (pos & 63)) & 1:
                return level.index_offset + self._rank_scalar(level, pos)
            if (int(level.collided[pos >> 6]) >> (pos & 63)) & 1:
                continue
            return NOT_FOUND
        return self.fallback.get(key, NOT_FOUND)

    @staticmethod
    def _rank_scalar(level: _Level, pos: int) -> int:
        word_idx = pos >> 6
        r = int(level.rank_blocks[pos >> 9])
        for w in range((pos >> 9) * 8, word_idx):
            r += int(level.occupied[w]).bit_count()
        r += (int(level.occupied[word_idx]) & ((1 << (pos & 63)) - 1)).bit_count()
        return r

    def size_bits(self) -> int:
        return sum(level.bits() for level in self.levels) + 128 * len(self.fallback)

    def serialize(self) -> bytes:
        out = [MAGIC]
        out.append(
            struct.pack(
                "<QdQII",
                self.n_keys,
                self.gamma,
                self.master_seed,
                len(self.levels),
                len(self.fallback),
            )
        )
        for level in self.levels:
            out.append(
                struct.pack(
                    "<QQQQQ",
                    level.size,
                    level.seed,
                    level.index_offset,
                    len(level.occupied),
                    len(level.rank_blocks),
                )
            )
            out.append(level.occupied.tobytes())
            out.append(level.collided.tobytes())
            out.append(level.rank_blocks.tobytes())
        for key in sorted(self.fallback):
            out.append(struct.pack("<QQ", key, self.fallback[key]))
        return b"".join(out)

    @classmethod
    def deserialize(cls, data: bytes) -> "Mphf":
        try:
            if data[:8] != MAGIC:
                raise MphfFormatError("bad MPHF magic")
            off = 8
            n_keys, gamma, master_seed, n_levels, n_fallback = struct.unpack_from(
                "<QdQII", data, off
            )
            off += struct.calcsize("<QdQII")
            levels: list[_Level] = []
            for _ in range(n_levels):
                size, seed, index_offset, n_words, n_blocks = struct.unpack_from(
                    "<QQQQQ", data, off
                )
                off += 40
                occupied = np.frombuffer(data, dtype=U64, count=n_words, offset=off).copy()
                off += 8 * n_words
                collided = np.frombuffer(data, dtype=U64, count=n_words, offset=off).copy()
                off += 8 * n_words
                blocks = np.frombuffer(data, dtype=U64, count=n_blocks, offset=off).copy()
                off += 8 * n_blocks
                levels.append(_Level(size, seed, occupied, collided, blocks, index_offset))
            fallback = {}
            for _ in range(n_fallback):
                key, idx = struct.unpack_from("<QQ", data, off)
                off += 16
                fallback[key] = idx
            if off > len(data):
                raise MphfFormatError("truncated MPHF stream")
        except (struct.error, ValueError) as exc:
            raise MphfFormatError(f"corrupt MPHF stream: {exc}") from exc
        return cls(n_keys, gamma, master_seed, levels, fallback)


def build_mphf(
    keys: np.ndarray,
    gamma: float = DEFAULT_GAMMA,
    master_seed: int = DEFAULT_MASTER_SEED,
) -> Mphf:
    return Mphf.build(keys, gamma=gamma, master_seed=master_seed)


def mphf_query(m: Mphf, key: int) -> int:
    return m.query(key)
