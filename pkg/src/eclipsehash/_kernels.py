"""Hot inner loops, each in a numba and a pure-numpy flavour.

The public names at the bottom of the module are bound to one flavour
according to :data:`eclipsehash._accel.USE_NUMBA`. Both flavours stay
importable so tests and the benchmark can compare them directly.

Layout conventions shared by every kernel:

* codes are C-contiguous ``uint64`` arrays of shape ``(count, words)``;
  bit ``j`` of a code lives in word ``j // 64`` at position ``j % 64``;
* neighbor lists are ordered by ``(distance, index)``.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

WORD_BITS = 64


def n_words(nbits):
    return (nbits + WORD_BITS - 1) // WORD_BITS


# ---------------------------------------------------------------- packing

def pack_rows_np(bits):
    bits = np.asarray(bits, dtype=bool)
    m, nbits = bits.shape
    w = n_words(nbits)
    padded = np.zeros((m, w * WORD_BITS), dtype=bool)
    padded[:, :nbits] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


@njit(cache=True)
def pack_rows_nb(bits):
    m, nbits = bits.shape
    w = (nbits + 63) // 64
    out = np.zeros((m, w), dtype=np.uint64)
    one = np.uint64(1)
    for r in range(m):
        for j in range(nbits):
            if bits[r, j]:
                out[r, j >> 6] |= one << np.uint64(j & 63)
    return out


def unpack_rows(codes, nbits):
    codes = np.ascontiguousarray(codes, dtype=np.uint64)
    raw = codes.astype("<u8", copy=False).view(np.uint8)
    bits = np.unpackbits(raw, axis=1, bitorder="little")
    return bits[:, :nbits].astype(bool)


# ---------------------------------------------------------------- popcount

@njit(inline="always")
def _popcount64(v):
    v = v - ((v >> np.uint64(1)) & np.uint64(0x5555555555555555))
    v = (v & np.uint64(0x3333333333333333)) + ((v >> np.uint64(2)) & np.uint64(0x3333333333333333))
    v = (v + (v >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (v * np.uint64(0x0101010101010101)) >> np.uint64(56)


def hamming_to_all_np(codes, q):
    return np.bitwise_count(codes ^ q).sum(axis=1, dtype=np.int64)


@njit(cache=True)
def hamming_to_all_nb(codes, q):
    m, w = codes.shape
    out = np.empty(m, dtype=np.int64)
    for r in range(m):
        s = 0
        for j in range(w):
            s += _popcount64(codes[r, j] ^ q[j])
        out[r] = s
    return out


# ---------------------------------------------------------------- Hamming kNN

def knn_hamming_np(codes, qcodes, k):
    m = codes.shape[0]
    out = np.empty((qcodes.shape[0], k), dtype=np.int64)
    idx = np.arange(m, dtype=np.int64)
    for qi in range(qcodes.shape[0]):
        # (distance, index) packed into one unique integer key
        key = hamming_to_all_np(codes, qcodes[qi]) * m + idx
        if k < m:
            part = np.argpartition(key, k - 1)[:k]
            out[qi] = part[np.argsort(key[part])]
        else:
            out[qi] = np.argsort(key)
    return out


@njit(cache=True)
def knn_hamming_nb(codes, qcodes, k, nbits):
    # counting sort over the nbits + 1 possible distances, truncated at k
    m, w = codes.shape
    nq = qcodes.shape[0]
    out = np.empty((nq, k), dtype=np.int64)
    dist = np.empty(m, dtype=np.int64)
    slot = np.empty(nbits + 1, dtype=np.int64)
    for qi in range(nq):
        slot[:] = 0
        for r in range(m):
            s = 0
            for j in range(w):
                s += _popcount64(codes[r, j] ^ qcodes[qi, j])
            dist[r] = s
            slot[s] += 1
        start = 0
        for dv in range(nbits + 1):
            c = slot[dv]
            slot[dv] = start
            start += c
        for r in range(m):
            p = slot[dist[r]]
            if p < k:
                out[qi, p] = r
            slot[dist[r]] = p + 1
    return out


# ---------------------------------------------------------------- L2 kNN

def sqdist_to_all_np(x, q):
    diff = x - q
    return np.einsum("ij,ij->i", diff, diff)


@njit(cache=True)
def sqdist_to_all_nb(x, q):
    m, n = x.shape
    out = np.empty(m, dtype=np.float64)
    for r in range(m):
        s = 0.0
        for i in range(n):
            t = x[r, i] - q[i]
            s += t * t
        out[r] = s
    return out


def knn_l2_np(x, queries, k):
    out = np.empty((queries.shape[0], k), dtype=np.int64)
    for qi in range(queries.shape[0]):
        out[qi] = np.argsort(sqdist_to_all_np(x, queries[qi]), kind="stable")[:k]
    return out


@njit(cache=True)
def knn_l2_nb(x, queries, k):
    nq = queries.shape[0]
    out = np.empty((nq, k), dtype=np.int64)
    for qi in range(nq):
        order = np.argsort(sqdist_to_all_nb(x, queries[qi]), kind="mergesort")
        out[qi] = order[:k]
    return out


# ---------------------------------------------------------------- hypersphere bits

def inside_spheres_np(x, centers, radii_sq, chunk=16):
    m = x.shape[0]
    out = np.empty((m, centers.shape[0]), dtype=bool)
    for s in range(0, m, chunk):
        diff = x[s:s + chunk, None, :] - centers[None, :, :]
        out[s:s + chunk] = np.einsum("abi,abi->ab", diff, diff) < radii_sq
    return out


@njit(cache=True)
def inside_spheres_nb(x, centers, radii_sq):
    m, n = x.shape
    nb = centers.shape[0]
    out = np.empty((m, nb), dtype=np.bool_)
    for r in range(m):
        for k in range(nb):
            s = 0.0
            for i in range(n):
                t = x[r, i] - centers[k, i]
                s += t * t
            out[r, k] = s < radii_sq[k]
    return out


# np.packbits beats the numba loop, so both backends share it.
pack_rows = pack_rows_np

if USE_NUMBA:
    hamming_to_all = hamming_to_all_nb
    sqdist_to_all = sqdist_to_all_nb
    inside_spheres = inside_spheres_nb

    def knn_hamming(codes, qcodes, k, nbits):
        return knn_hamming_nb(codes, qcodes, k, nbits)

    knn_l2 = knn_l2_nb
else:
    hamming_to_all = hamming_to_all_np
    sqdist_to_all = sqdist_to_all_np
    inside_spheres = inside_spheres_np

    def knn_hamming(codes, qcodes, k, nbits):
        return knn_hamming_np(codes, qcodes, k)

    knn_l2 = knn_l2_np
