"""Exact k-nearest-neighbor search in L2 and in Hamming space.

Both searches order results by ``(distance, record index)``, so ties at the
k-th position always go to the lower index.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .core import BitCode, PackedCodes
from .errors import DimensionError, IncomparableCodesError, ParameterError


def _check_k(k):
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k}")
    return int(k)


def _as_packed(codes) -> PackedCodes:
    if isinstance(codes, PackedCodes):
        return codes
    return PackedCodes.from_codes(codes)


def knn_l2_batch(records, queries, k: int) -> np.ndarray:
    """``(Q, min(k, M))`` array of record ids nearest to each query."""
    k = _check_k(k)
    x = np.ascontiguousarray(records, dtype=np.float64)
    q = np.ascontiguousarray(queries, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ParameterError("records must be a nonempty (M, N) array")
    if q.ndim != 2 or q.shape[1] != x.shape[1]:
        raise DimensionError(f"queries of shape {q.shape} do not match records of dim {x.shape[1]}")
    return _kernels.knn_l2(x, q, min(k, x.shape[0]))


def knn_l2(records, q, k: int) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1:
        raise DimensionError("knn_l2 takes one query vector")
    return knn_l2_batch(records, q[None, :], k)[0]


def knn_hamming_batch(codes, qcodes, k: int) -> np.ndarray:
    k = _check_k(k)
    codes = _as_packed(codes)
    qcodes = _as_packed(qcodes)
    if len(codes) == 0:
        raise ParameterError("cannot search an empty code set")
    if codes.nbits != qcodes.nbits:
        raise IncomparableCodesError(f"{codes.nbits}-bit records vs {qcodes.nbits}-bit queries")
    return _kernels.knn_hamming(codes.words, qcodes.words, min(k, len(codes)), codes.nbits)


def knn_hamming(codes, qcode: BitCode, k: int) -> np.ndarray:
    q = PackedCodes(qcode.words[None, :], qcode.nbits)
    return knn_hamming_batch(codes, q, k)[0]


def hamming_distances(codes, qcode: BitCode) -> np.ndarray:
    codes = _as_packed(codes)
    if codes.nbits != qcode.nbits:
        raise IncomparableCodesError(f"{codes.nbits}-bit records vs {qcode.nbits}-bit query")
    return _kernels.hamming_to_all(codes.words, qcode.words)
