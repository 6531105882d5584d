"""Seeded random streams, packed bit codes and the two code distances."""
from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .errors import (
    IncomparableCodesError,
    ParameterError,
    SphericalHammingIndeterminate,
    SphericalHammingZeroDivision,
)

WORD_BITS = _kernels.WORD_BITS

# ------------------------------------------------------------------ randomness


def rng_stream(seed: int, purpose: str) -> np.random.Generator:
    """Independent PCG64 stream for one consumer of a seed.

    The sub-seed is ``SeedSequence(seed, spawn_key=(crc32(purpose),))``, so a
    new purpose never shifts the draws of an existing one. Normals come from
    numpy's ziggurat sampler (``Generator.standard_normal``).
    """
    if not 0 <= int(seed) < 2**64:
        raise ParameterError(f"seed must fit in 64 unsigned bits, got {seed}")
    key = zlib.crc32(purpose.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))


def sample_standard_normal_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """``rows x cols`` i.i.d. N(0, 1) draws, filled in row-major order."""
    if rows < 1 or cols < 1:
        raise ParameterError(f"matrix shape must be positive, got {rows}x{cols}")
    return rng.standard_normal((rows, cols))


# ------------------------------------------------------------------ bit codes


@dataclass(frozen=True, eq=False)
class BitCode:
    """A single ``nbits``-long code packed into little-endian 64-bit words."""

    words: np.ndarray
    nbits: int

    def __post_init__(self):
        words = np.ascontiguousarray(self.words, dtype=np.uint64)
        if words.ndim != 1 or words.size != _kernels.n_words(self.nbits):
            raise ParameterError(f"{words.size} words cannot hold a {self.nbits}-bit code")
        words.setflags(write=False)
        object.__setattr__(self, "words", words)

    def bit(self, i: int) -> int:
        if not 0 <= i < self.nbits:
            raise IndexError(i)
        return int(self.words[i // WORD_BITS] >> np.uint64(i % WORD_BITS)) & 1

    def to_bits(self) -> np.ndarray:
        return _kernels.unpack_rows(self.words[None, :], self.nbits)[0]

    def popcount(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def __eq__(self, other):
        if not isinstance(other, BitCode):
            return NotImplemented
        return self.nbits == other.nbits and bool(np.array_equal(self.words, other.words))

    def __hash__(self):
        return hash((self.nbits, self.words.tobytes()))

    def __repr__(self):
        s = "".join(str(int(b)) for b in self.to_bits()[:64])
        return f"BitCode({s}{'...' if self.nbits > 64 else ''}, nbits={self.nbits})"


@dataclass(frozen=True, eq=False)
class PackedCodes:
    """A batch of equal-length codes stored as a ``(count, words)`` array."""

    words: np.ndarray
    nbits: int

    def __post_init__(self):
        words = np.ascontiguousarray(self.words, dtype=np.uint64)
        if words.ndim != 2 or words.shape[1] != _kernels.n_words(self.nbits):
            raise ParameterError(f"word array of shape {words.shape} cannot hold {self.nbits}-bit codes")
        object.__setattr__(self, "words", words)

    @classmethod
    def from_bools(cls, bits) -> "PackedCodes":
        bits = np.asarray(bits, dtype=bool)
        if bits.ndim != 2:
            raise ParameterError("expected a 2-D boolean array")
        return cls(_kernels.pack_rows(np.ascontiguousarray(bits)), bits.shape[1])

    @classmethod
    def from_codes(cls, codes: Sequence[BitCode], nbits: int | None = None) -> "PackedCodes":
        codes = list(codes)
        if not codes:
            if nbits is None:
                raise ParameterError("nbits is required for an empty code list")
            return cls(np.zeros((0, _kernels.n_words(nbits)), np.uint64), nbits)
        nb = codes[0].nbits
        for c in codes:
            if c.nbits != nb:
                raise IncomparableCodesError(f"mixed code lengths {nb} and {c.nbits}")
        return cls(np.stack([c.words for c in codes]), nb)

    def to_bools(self) -> np.ndarray:
        return _kernels.unpack_rows(self.words, self.nbits)

    def __len__(self):
        return self.words.shape[0]

    def __getitem__(self, i) -> BitCode:
        return BitCode(self.words[i].copy(), self.nbits)

    def __iter__(self) -> Iterator[BitCode]:
        for i in range(len(self)):
            yield self[i]


def pack_bits(bits) -> BitCode:
    """Pack a 0/1 sequence; bit ``i`` of the result equals ``bits[i]``."""
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise ParameterError("pack_bits expects a flat sequence")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ParameterError("bits must be 0 or 1")
    return BitCode(_kernels.pack_rows(arr.astype(bool)[None, :])[0], arr.size)


def _check_comparable(a: BitCode, b: BitCode):
    if a.nbits != b.nbits:
        raise IncomparableCodesError(f"cannot compare {a.nbits}-bit and {b.nbits}-bit codes")


def hamming_distance(a: BitCode, b: BitCode) -> int:
    _check_comparable(a, b)
    return int(np.bitwise_count(a.words ^ b.words).sum())


def spherical_hamming_distance(a: BitCode, b: BitCode) -> float:
    """``popcount(a xor b) / popcount(a and b)``.

    Undefined when the codes share no 1-bit; raises instead of returning
    inf or nan.
    """
    _check_comparable(a, b)
    x = int(np.bitwise_count(a.words ^ b.words).sum())
    n = int(np.bitwise_count(a.words & b.words).sum())
    if n == 0:
        if x == 0:
            raise SphericalHammingIndeterminate("0/0: both codes are all-zero")
        raise SphericalHammingZeroDivision(f"{x}/0: codes share no 1-bits")
    return x / n


# ------------------------------------------------------------------ datasets


@dataclass(frozen=True, eq=False)
class Dataset:
    """Record and query vectors sharing one dimension, stored as float64."""

    records: np.ndarray
    queries: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        rec = np.ascontiguousarray(self.records, dtype=np.float64)
        qry = np.ascontiguousarray(self.queries, dtype=np.float64)
        if rec.ndim != 2 or qry.ndim != 2:
            raise ParameterError("records and queries must be 2-D arrays")
        if rec.shape[1] < 1 or rec.shape[1] != qry.shape[1]:
            raise ParameterError(f"dimension mismatch: records {rec.shape}, queries {qry.shape}")
        if not (np.isfinite(rec).all() and np.isfinite(qry).all()):
            raise ParameterError("feature vectors must be finite")
        object.__setattr__(self, "records", rec)
        object.__setattr__(self, "queries", qry)

    @property
    def dim(self) -> int:
        return self.records.shape[1]

    def __repr__(self):
        return f"Dataset({self.name!r}, records={self.records.shape[0]}, queries={self.queries.shape[0]}, dim={self.dim})"
