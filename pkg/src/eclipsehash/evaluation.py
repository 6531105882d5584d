"""Recall, Ratio(d) and d_*, (c, d) sweeps, hashing benchmarks and the
grid connectivity checker."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.cluster.hierarchy import DisjointSet
from scipy.ndimage import generate_binary_structure, label
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from threadpoolctl import threadpool_limits

from .core import Dataset
from .errors import DimensionError, ParameterError
from .hashers import METHODS, sample_eh, sample_family
from .search import knn_hamming_batch, knn_l2_batch


@dataclass(frozen=True)
class RecallResult:
    method: str
    k: int
    nbits: int
    mean_recall: float
    seed: int | None = None
    c: float | None = None
    d: float | None = None
    n_queries: int = 0

    def as_row(self):
        return asdict(self)


@dataclass(frozen=True)
class TimingResult:
    method: str
    nbits: int
    dim: int
    vectors_hashed: int
    elapsed: float
    per_vector: float
    repeats: int
    backend: str = ""


# ------------------------------------------------------------------ recall


def default_k(n_records: int, percent: float = 1.0) -> int:
    """``ceil(percent% of n_records)``, at least 1."""
    return max(1, math.ceil(n_records * percent / 100.0 - 1e-9))


def recall_single(truth, found, k: int) -> float:
    truth = np.asarray(truth)
    found = np.asarray(found)
    if len(truth) != k or len(found) != k:
        raise ParameterError(f"both neighbor lists must hold k={k} ids, got {len(truth)} and {len(found)}")
    return len(np.intersect1d(truth, found)) / k


def exact_neighbors(ds: Dataset, k: int) -> np.ndarray:
    return knn_l2_batch(ds.records, ds.queries, k)


def _check_k_fits(ds, k):
    if k > ds.records.shape[0]:
        raise ParameterError(f"k={k} exceeds the {ds.records.shape[0]} records")


def recall_from_codes(truth, record_codes, query_codes, k: int) -> float:
    found = knn_hamming_batch(record_codes, query_codes, k)
    hits = [np.intersect1d(t, f, assume_unique=True).size for t, f in zip(truth, found)]
    return float(np.mean(hits)) / k


def mean_recall(ds: Dataset, family, k: int | None = None, *, truth=None, seed=None) -> RecallResult:
    """Mean over queries of ``|L2 kNN ∩ Hamming kNN| / k``."""
    if family.dim != ds.dim:
        raise DimensionError(f"family expects dim {family.dim}, dataset has {ds.dim}")
    k = default_k(ds.records.shape[0]) if k is None else int(k)
    _check_k_fits(ds, k)
    if truth is None:
        truth = exact_neighbors(ds, k)
    elif truth.shape != (ds.queries.shape[0], k):
        raise ParameterError(f"truth table of shape {truth.shape} does not fit k={k}")
    value = recall_from_codes(truth, family.hash_batch(ds.records), family.hash_batch(ds.queries), k)
    eh = family.method == "eh"
    return RecallResult(
        method=family.method,
        k=k,
        nbits=family.nbits,
        mean_recall=value,
        seed=seed,
        c=family.c if eh else None,
        d=family.d if eh else None,
        n_queries=ds.queries.shape[0],
    )


# ------------------------------------------------------------------ Ratio(d)


def _norms(data):
    x = data.records if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    return np.linalg.norm(x, axis=1)


def ratio(data, d: float) -> float:
    """Fraction of records strictly inside the sphere of radius ``d``.

    Equivalently, the fraction lifted to the open southern hemisphere.
    """
    if not d > 0:
        raise ParameterError("d must be positive")
    norms = _norms(data)
    return float(np.count_nonzero(norms < d)) / norms.size


def ratio_curve(data, d_grid) -> np.ndarray:
    norms = np.sort(_norms(data))
    d_grid = np.asarray(d_grid, dtype=np.float64)
    return np.searchsorted(norms, d_grid, side="left") / norms.size


@dataclass(frozen=True)
class DStar:
    value: float
    grid_value: float | None = None


def d_star(data, d_grid=None, level: float = 0.99) -> DStar:
    """Infimum of ``d`` with ``ratio(d) > level``.

    ``ratio(d) > level`` holds exactly when ``d`` exceeds the ``j``-th smallest
    norm, ``j = floor(level * M) + 1``, so the infimum is that norm. When a
    grid is given the smallest grid point past the threshold is reported too.
    """
    norms = np.sort(_norms(data))
    m = norms.size
    frac = Fraction(str(level))
    j = (frac.numerator * m) // frac.denominator + 1
    if j > m:
        raise ParameterError(f"no d gives ratio > {level} with only {m} records")
    value = float(norms[j - 1])
    grid_value = None
    if d_grid is not None:
        grid = np.asarray(d_grid, dtype=np.float64)
        above = grid[grid > value]
        if above.size == 0:
            raise ParameterError(f"d grid never exceeds ratio {level} (needs d > {value:.6g})")
        grid_value = float(above.min())
    return DStar(value, grid_value)


# ------------------------------------------------------------------ sweeps


@dataclass(frozen=True)
class SweepGrid:
    c_values: tuple
    d_values: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.c_values)
        d = tuple(float(v) for v in self.d_values)
        if not c or not d:
            raise ParameterError("sweep grid must be nonempty")
        if any(not -1.0 <= v <= 1.0 for v in c):
            raise ParameterError("c values must lie in [-1, 1]")
        if any(v <= 0 for v in d) or any(b <= a for a, b in zip(d, d[1:])):
            raise ParameterError("d values must be positive and strictly increasing")
        object.__setattr__(self, "c_values", c)
        object.__setattr__(self, "d_values", d)

    @classmethod
    def default(cls, data, n_c=9, n_d=25, span=100.0):
        med = float(np.median(_norms(data)))
        if med <= 0:
            raise ParameterError("median record norm is zero; cannot anchor the d grid")
        return cls(np.linspace(-1.0, 1.0, n_c), np.geomspace(med / span, med * span, n_d))


@dataclass
class SweepResult:
    eh: list = field(default_factory=list)
    baselines: list = field(default_factory=list)
    c_opt: float | None = None
    d_opt: float | None = None
    best_recall: float | None = None

    @property
    def rows(self):
        return self.baselines + self.eh


def sweep(ds: Dataset, grid: SweepGrid, nbits: int, k: int | None = None, seed: int = 0,
          baselines=("lh", "ah", "hs"), truth=None, progress=None) -> SweepResult:
    """EH recall at every (c, d) plus each baseline once.

    All EH cells share the same sampled normals, so cells differ only in
    (c, d).
    """
    k = default_k(ds.records.shape[0]) if k is None else int(k)
    _check_k_fits(ds, k)
    if truth is None:
        truth = exact_neighbors(ds, k)
    out = SweepResult()
    for m in baselines:
        if m not in METHODS or m == "eh":
            raise ParameterError(f"unknown baseline {m!r}")
        fam = sample_family(m, ds.dim, nbits, seed)
        out.baselines.append(mean_recall(ds, fam, k, truth=truth, seed=seed))
    best = None
    for c in grid.c_values:
        for d in grid.d_values:
            res = mean_recall(ds, sample_eh(ds.dim, nbits, c, d, seed), k, truth=truth, seed=seed)
            out.eh.append(res)
            if progress is not None:
                progress(res)
            # first maximum in grid order wins ties
            if best is None or res.mean_recall > best.mean_recall:
                best = res
    out.c_opt, out.d_opt, out.best_recall = best.c, best.d, best.mean_recall
    return out


# ------------------------------------------------------------------ timing


def bench_hash(family, data, repeats: int = 5, warmup: int = 1) -> TimingResult:
    """Median single-threaded wall time of ``family.hash_batch(data)``."""
    from ._accel import backend

    if repeats < 3:
        raise ParameterError("repeats must be >= 3")
    data = np.ascontiguousarray(data, dtype=np.float64)
    times = []
    with threadpool_limits(limits=1):
        for _ in range(warmup):
            family.hash_batch(data)
        for _ in range(repeats):
            t0 = time.perf_counter()
            family.hash_batch(data)
            times.append(time.perf_counter() - t0)
    elapsed = float(np.median(times))
    return TimingResult(
        method=family.method,
        nbits=family.nbits,
        dim=family.dim,
        vectors_hashed=data.shape[0],
        elapsed=elapsed,
        per_vector=elapsed / data.shape[0],
        repeats=repeats,
        backend=backend(),
    )


# ------------------------------------------------------------------ connectivity


def code_key(bits) -> str:
    return "".join("1" if b else "0" for b in bits)


def _raster_points(box, shape):
    axes = [lo + (np.arange(r) + 0.5) * (hi - lo) / r for (lo, hi), r in zip(box, shape)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def connectivity_check(family, box, resolution: int = 512, compactify: bool = True,
                       refine: int = 2, factor: int = 9, margin: int = 12,
                       max_window_cells: int = 1 << 22) -> dict:
    """Connected components per code on a raster of ``box``.

    ``box`` is a sequence of ``(lo, hi)`` pairs, one per axis. Each cell is
    hashed at its center and joined to its axis neighbours that share its
    code. With ``compactify`` the space is closed with a point at infinity:
    border cells carrying the family's code at infinity are joined through
    it. Families with no such code (LH, AH) are never compactified.

    Regions thinner than a cell can fall apart into isolated cells. For up to
    ``refine`` rounds, every piece that is not the largest of its code is
    re-rasterized ``factor**round`` times finer in a window reaching
    ``margin`` cells past it (the factor shrinks so a window never exceeds
    ``max_window_cells``), and pieces
    are merged when the finer raster joins them. Pieces are never merged
    without such a path, so genuinely disconnected regions stay apart.
    ``refine=0`` gives the plain single-resolution count.

    Returns ``{code string: component count}`` for every code that occurs.
    """
    n = family.dim
    if n not in (1, 2, 3):
        raise DimensionError(f"connectivity check supports N in {{1, 2, 3}}, got {n}")
    if resolution < 64:
        raise ParameterError("resolution must be >= 64")
    if factor < 3 or factor % 2 == 0:
        raise ParameterError("refinement factor must be an odd integer >= 3")
    box = np.asarray(box, dtype=np.float64).reshape(-1, 2)
    if box.shape[0] != n or np.any(box[:, 1] <= box[:, 0]):
        raise ParameterError(f"box must give (lo, hi) with lo < hi for each of {n} axes")

    shape = (resolution,) * n
    bits = family.bits(_raster_points(box, shape))
    uniq, ids = np.unique(bits, axis=0, return_inverse=True)
    ids = ids.reshape(shape)
    n_cells = ids.size
    index = np.arange(n_cells).reshape(shape)

    rows, cols = [], []
    for ax in range(n):
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        same = ids[tuple(lo)] == ids[tuple(hi)]
        rows.append(index[tuple(lo)][same])
        cols.append(index[tuple(hi)][same])

    n_nodes = n_cells
    inf_code = family.code_at_infinity() if compactify else None
    if inf_code is not None:
        match = np.flatnonzero(np.all(uniq == np.asarray(inf_code, dtype=bool), axis=1))
        if match.size:
            border = np.zeros(shape, dtype=bool)
            for ax in range(n):
                edge = [slice(None)] * n
                edge[ax] = 0
                border[tuple(edge)] = True
                edge[ax] = -1
                border[tuple(edge)] = True
            hub = index[border & (ids == match[0])]
            rows.append(hub)
            cols.append(np.full(hub.size, n_cells))
            n_nodes += 1

    r = np.concatenate(rows)
    c = np.concatenate(cols)
    graph = coo_matrix((np.ones(r.size, dtype=np.int8), (r, c)), shape=(n_nodes, n_nodes))
    _, labels = connected_components(graph, directed=False)
    labels = labels[:n_cells].reshape(shape)

    merged = DisjointSet(np.unique(labels).tolist())
    cell = (box[:, 1] - box[:, 0]) / resolution
    structure = generate_binary_structure(n, 1)
    for level in range(1, refine + 1):
        f = factor**level
        pieces = _minor_pieces(labels, ids, merged)
        if not pieces:
            break
        for code_id, members in pieces:
            sel = np.isin(labels, members)
            where = np.nonzero(sel)
            lo_i = np.maximum(np.array([w.min() for w in where]) - margin, 0)
            hi_i = np.minimum(np.array([w.max() for w in where]) + margin + 1, resolution)
            win = tuple(slice(a, b) for a, b in zip(lo_i, hi_i))
            wbox = np.stack([box[:, 0] + lo_i * cell, box[:, 0] + hi_i * cell], axis=1)
            span = hi_i - lo_i
            fw = min(f, int((max_window_cells / np.prod(span)) ** (1.0 / n)))
            fw -= 1 - fw % 2
            if fw < 3:
                continue
            fine_shape = tuple(span * fw)
            fine = np.all(family.bits(_raster_points(wbox, fine_shape)) == uniq[code_id], axis=1)
            fine_lab, _ = label(fine.reshape(fine_shape), structure=structure)
            # coarse cell centre i sits on the centre of fine cell i*fw + (fw-1)//2
            coarse = np.nonzero(ids[win] == code_id)
            probe = tuple(ci * fw + (fw - 1) // 2 for ci in coarse)
            fl = fine_lab[probe]
            cl = labels[win][coarse]
            for lab_value in np.unique(fl[fl > 0]):
                joined = np.unique(cl[fl == lab_value])
                for other in joined[1:]:
                    merged.merge(joined[0], other)

    counts = {}
    flat_ids = ids.ravel()
    flat_labels = labels.ravel()
    for code_id in range(uniq.shape[0]):
        comps = np.unique(flat_labels[flat_ids == code_id])
        counts[code_key(uniq[code_id])] = len({merged[int(x)] for x in comps})
    return counts


def _minor_pieces(labels, ids, merged):
    """``(code id, component labels)`` for every merged piece that is not the
    largest piece of its code."""
    flat_labels = labels.ravel()
    first = np.unique(flat_labels, return_index=True)
    sizes = np.bincount(flat_labels)
    by_code = {}
    for lab_value, pos in zip(*first):
        root = merged[int(lab_value)]
        code_id = int(ids.ravel()[pos])
        by_code.setdefault(code_id, {}).setdefault(root, []).append(int(lab_value))
    out = []
    for code_id, groups in by_code.items():
        if len(groups) < 2:
            continue
        ranked = sorted(groups.values(), key=lambda g: -sum(sizes[x] for x in g))
        out.extend((code_id, g) for g in ranked[1:])
    return out
