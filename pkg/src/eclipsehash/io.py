"""Dataset loaders and writers, synthetic data, and family/code files.

File formats
------------
idx
    Big-endian MNIST layout: 4-byte magic (``0x00000803`` for u8 images,
    ``0x00000801`` for u8 labels), then one 4-byte count per dimension,
    then the raw bytes.
fvecs
    Repeated records of ``<i4 dim`` followed by ``dim`` ``<f4`` values.
csv
    One vector per line; a first line whose first field is not a number is
    treated as a header.
family
    One line of JSON (terminated by ``\\n``) followed by a little-endian
    float64 blob holding the family's arrays in row-major order, in the
    order listed under ``"arrays"`` in the header.
codes
    Raw little-endian uint64 words, ``ceil(B / 64)`` per code, plus a JSON
    sidecar ``<path>.json`` with ``nbits``, ``count`` and ``method``.
"""
from __future__ import annotations

import csv
import json
import os
import struct
from pathlib import Path

import numpy as np

from .core import Dataset, PackedCodes, rng_stream
from .errors import FormatError, ParameterError
from .hashers import (
    AffineHyperplaneFamily,
    EclipseFamily,
    HypersphereFamily,
    LinearHyperplaneFamily,
)

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801
FAMILY_FORMAT = "eclipsehash-family"
FAMILY_VERSION = 1
CODES_FORMAT = "eclipsehash-codes"

# ------------------------------------------------------------------ synthetic


def gen_synthetic(dim: int = 512, n_records: int = 10_000, n_queries: int = 1_000, seed: int = 0) -> Dataset:
    """Records and queries drawn from N(0, I_dim) on independent streams."""
    if dim < 1 or n_records < 1 or n_queries < 1:
        raise ParameterError("dim and counts must be >= 1")
    records = rng_stream(seed, "data.records").standard_normal((n_records, dim))
    queries = rng_stream(seed, "data.queries").standard_normal((n_queries, dim))
    return Dataset(records, queries, name=f"gaussian{dim}-seed{seed}")


def center_dataset(ds: Dataset) -> Dataset:
    """Shift records and queries by the record mean."""
    if ds.records.shape[0] == 0:
        raise ParameterError("cannot center an empty record set")
    mean = ds.records.mean(axis=0)
    return Dataset(ds.records - mean, ds.queries - mean, name=ds.name)


# ------------------------------------------------------------------ idx


def _read_idx(path, expected_magic):
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise FormatError(f"{path}: file too short for an idx header", offset=len(raw))
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise FormatError(f"{path}: bad idx magic 0x{magic:08x}, expected 0x{expected_magic:08x}", offset=0)
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise FormatError(f"{path}: truncated idx header", offset=len(raw))
    shape = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(shape))
    if len(raw) < header + size:
        raise FormatError(f"{path}: truncated idx payload, need {size} bytes", offset=len(raw))
    if len(raw) > header + size:
        raise FormatError(f"{path}: {len(raw) - header - size} trailing bytes", offset=header + size)
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(shape)


def load_idx(images_path, labels_path=None):
    """Read an idx u8 image tensor as ``(n, rows*cols)`` float64, plus labels if given."""
    images = _read_idx(images_path, IDX_IMAGES)
    vectors = images.reshape(images.shape[0], -1).astype(np.float64)
    labels = None
    if labels_path is not None:
        labels = _read_idx(labels_path, IDX_LABELS).astype(np.int64)
        if labels.shape[0] != vectors.shape[0]:
            raise FormatError(f"{labels_path}: {labels.shape[0]} labels for {vectors.shape[0]} images")
    return vectors, labels


def write_idx_images(path, images):
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ParameterError("idx images must be an (n, rows, cols) array")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", IDX_IMAGES))
        fh.write(struct.pack(">3I", *images.shape))
        fh.write(images.tobytes())


# ------------------------------------------------------------------ fvecs


def load_fvecs(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    rows = []
    pos = 0
    dim0 = None
    while pos < len(raw):
        if pos + 4 > len(raw):
            raise FormatError(f"{path}: truncated dimension field", offset=pos)
        (dim,) = struct.unpack_from("<i", raw, pos)
        if dim < 1:
            raise FormatError(f"{path}: invalid dimension {dim}", offset=pos)
        if dim0 is None:
            dim0 = dim
        elif dim != dim0:
            raise FormatError(f"{path}: dimension {dim} differs from first record's {dim0}", offset=pos)
        end = pos + 4 + 4 * dim
        if end > len(raw):
            have = (len(raw) - pos - 4) // 4
            raise FormatError(f"{path}: record claims dim={dim} but only {have} floats remain", offset=pos)
        rows.append(np.frombuffer(raw, dtype="<f4", count=dim, offset=pos + 4))
        pos = end
    if not rows:
        return np.zeros((0, 0), dtype=np.float64)
    return np.stack(rows).astype(np.float64)


def write_fvecs(path, vectors):
    vectors = np.asarray(vectors, dtype="<f4")
    if vectors.ndim != 2:
        raise ParameterError("fvecs expects a 2-D array")
    n, dim = vectors.shape
    buf = np.empty((n, dim + 1), dtype="<f4")
    buf[:, 0] = np.array([dim], dtype="<i4").view("<f4")[0]
    buf[:, 1:] = vectors
    with open(path, "wb") as fh:
        fh.write(buf.tobytes())


# ------------------------------------------------------------------ csv


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_csv(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields or all(not f.strip() for f in fields):
                continue
            if lineno == 1 and not _is_number(fields[0].strip()):
                continue
            try:
                row = [float(f) for f in fields]
            except ValueError as exc:
                raise FormatError(f"{path}: unparsable field ({exc})", line=lineno) from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise FormatError(f"{path}: expected {width} fields, got {len(row)}", line=lineno)
            rows.append(row)
    if not rows:
        return np.zeros((0, 0), dtype=np.float64)
    return np.asarray(rows, dtype=np.float64)


def write_csv(path, vectors):
    np.savetxt(path, np.asarray(vectors, dtype=np.float64), delimiter=",", fmt="%.17g")


# ------------------------------------------------------------------ dispatch


def load_vectors(path) -> np.ndarray:
    """Load any supported vector file, picking the format from the name."""
    name = os.path.basename(str(path)).lower()
    if name.endswith(".fvecs"):
        return load_fvecs(path)
    if name.endswith(".csv") or name.endswith(".txt"):
        return load_csv(path)
    if "idx3" in name or name.endswith(".idx"):
        return load_idx(path)[0]
    raise FormatError(f"{path}: cannot infer format from file name (.fvecs, .csv, idx3)")


def load_dataset(records_path, queries_path=None, center=False, name=None) -> Dataset:
    """Build a dataset from files. Without ``queries_path`` the records double as queries."""
    records = load_vectors(records_path)
    if records.shape[0] == 0:
        raise FormatError(f"{records_path}: no vectors")
    queries = load_vectors(queries_path) if queries_path is not None else records
    if queries.shape[0] == 0:
        raise FormatError(f"{queries_path}: no vectors")
    ds = Dataset(records, queries, name=name or Path(records_path).stem)
    return center_dataset(ds) if center else ds


# ------------------------------------------------------------------ families


def _family_arrays(family):
    if isinstance(family, LinearHyperplaneFamily):
        return [("W", family.W)]
    if isinstance(family, AffineHyperplaneFamily):
        return [("W", family.W), ("b", family.b)]
    if isinstance(family, HypersphereFamily):
        return [("centers", family.centers), ("radii", family.radii)]
    if isinstance(family, EclipseFamily):
        return [("Wt", family.Wt), ("C", family.C)]
    raise ParameterError(f"not a hash family: {type(family).__name__}")


def _expected_shapes(method, n, b):
    return {
        "lh": {"W": (b, n)},
        "ah": {"W": (b, n), "b": (b,)},
        "hs": {"centers": (b, n), "radii": (b,)},
        "eh": {"Wt": (b, n + 1), "C": (n + 1,)},
    }[method]


def save_family(family, path, seed=None):
    arrays = _family_arrays(family)
    header = {
        "format": FAMILY_FORMAT,
        "version": FAMILY_VERSION,
        "method": family.method,
        "N": family.dim,
        "B": family.nbits,
        "c": family.c if isinstance(family, EclipseFamily) else None,
        "d": family.d if isinstance(family, EclipseFamily) else None,
        "seed": seed,
        "arrays": [{"name": k, "shape": list(np.shape(v))} for k, v in arrays],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        for _, v in arrays:
            fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def read_family_header(path) -> dict:
    with open(path, "rb") as fh:
        line = fh.readline()
    try:
        return json.loads(line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: family header is not JSON ({exc.msg})", offset=exc.pos) from None


def load_family(path):
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise FormatError(f"{path}: missing family header line", offset=0)
    try:
        header = json.loads(raw[:nl])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: family header is not JSON ({exc.msg})", offset=exc.pos) from None
    if header.get("format") != FAMILY_FORMAT:
        raise FormatError(f"{path}: not a family file", offset=0)
    if header.get("version") != FAMILY_VERSION:
        raise FormatError(f"{path}: unsupported family version {header.get('version')}", offset=0)
    method = header.get("method")
    if method not in ("lh", "ah", "hs", "eh"):
        raise FormatError(f"{path}: unknown method {method!r}", offset=0)
    n, b = int(header["N"]), int(header["B"])
    shapes = _expected_shapes(method, n, b)
    listed = {a["name"]: tuple(a["shape"]) for a in header.get("arrays", [])}
    if listed != shapes:
        raise FormatError(f"{path}: array shapes {listed} do not fit method {method} with N={n}, B={b}", offset=0)

    blob = raw[nl + 1:]
    need = 8 * sum(int(np.prod(s)) for s in shapes.values())
    if len(blob) != need:
        raise FormatError(f"{path}: blob holds {len(blob)} bytes, method {method} needs {need}", offset=nl + 1)
    arrays = {}
    pos = 0
    for a in header["arrays"]:
        shape = tuple(a["shape"])
        count = int(np.prod(shape))
        arrays[a["name"]] = np.frombuffer(blob, dtype="<f8", count=count, offset=pos).astype(np.float64).reshape(shape)
        pos += 8 * count

    if method == "lh":
        return LinearHyperplaneFamily(arrays["W"])
    if method == "ah":
        return AffineHyperplaneFamily(arrays["W"], arrays["b"])
    if method == "hs":
        return HypersphereFamily(arrays["centers"], arrays["radii"])
    if header.get("d") is None:
        raise FormatError(f"{path}: eclipse family without d", offset=0)
    return EclipseFamily(arrays["Wt"], arrays["C"], float(header["d"]))


# ------------------------------------------------------------------ codes


def save_codes(path, codes: PackedCodes, **meta):
    words = np.ascontiguousarray(codes.words, dtype="<u8")
    with open(path, "wb") as fh:
        fh.write(words.tobytes())
    sidecar = {"format": CODES_FORMAT, "nbits": codes.nbits, "count": len(codes), **meta}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def load_codes(path):
    """Return ``(PackedCodes, sidecar dict)``."""
    side_path = Path(str(path) + ".json")
    if not side_path.exists():
        raise FormatError(f"{path}: missing sidecar {side_path.name}")
    meta = json.loads(side_path.read_text())
    nbits, count = int(meta["nbits"]), int(meta["count"])
    w = (nbits + 63) // 64
    raw = Path(path).read_bytes()
    if len(raw) != 8 * w * count:
        raise FormatError(f"{path}: {len(raw)} bytes, expected {8 * w * count} for {count} x {nbits}-bit codes", offset=len(raw))
    words = np.frombuffer(raw, dtype="<u8").astype(np.uint64).reshape(count, w)
    if nbits % 64 and count:
        stray = np.flatnonzero(words[:, -1] >> np.uint64(nbits % 64))
        if stray.size:
            row = int(stray[0])
            raise FormatError(f"{path}: code {row} sets bits past bit {nbits - 1}", offset=8 * (row * w + w - 1))
    return PackedCodes(words, nbits), meta
