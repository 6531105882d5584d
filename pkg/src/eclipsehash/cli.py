"""``eclipsehash`` command line.

Machine-readable output goes to files; stdout only carries a short human
summary. CSV files start with the line ``# eclipsehash v1``.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 invariant
violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .errors import EclipseHashError, FormatError, InvariantViolation, ParameterError
from .evaluation import (
    SweepGrid,
    bench_hash,
    connectivity_check,
    d_star,
    default_k,
    exact_neighbors,
    mean_recall,
    ratio_curve,
    recall_from_codes,
    sweep,
)
from .hashers import (
    METHODS,
    AffineHyperplaneFamily,
    EclipseFamily,
    HypersphereFamily,
    LinearHyperplaneFamily,
    sample_family,
)
from .io import gen_synthetic, load_codes, load_dataset, load_family, save_codes, save_family, write_fvecs

CSV_TAG = "# eclipsehash v1"
RESULT_COLUMNS = ["method", "c", "d", "B", "k", "seed", "mean_recall"]

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


_NUM = r"(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?"


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # let values such as "-5,5" or "-1;-2,3" through as arguments
        self._negative_number_matcher = re.compile(rf"^-{_NUM}([,;:]-?{_NUM})*$")

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ------------------------------------------------------------------ helpers


def _floats(text):
    """``"a,b,c"`` or ``"lin:lo:hi:n"`` / ``"log:lo:hi:n"``."""
    text = text.strip()
    try:
        if text.startswith(("lin:", "log:")):
            kind, lo, hi, n = text.split(":")
            fn = np.linspace if kind == "lin" else np.geomspace
            return [float(v) for v in fn(float(lo), float(hi), int(n))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse number list {text!r}") from None


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse integer list {text!r}") from None


def _methods(text):
    out = [m.strip().lower() for m in text.split(",") if m.strip()]
    bad = [m for m in out if m not in METHODS]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {','.join(METHODS)}")
    return out


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer seed") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _box(text, dim):
    parts = [p for p in text.split(";") if p.strip()]
    try:
        pairs = [tuple(float(v) for v in p.split(",")) for p in parts]
    except ValueError:
        raise UsageError(f"cannot parse box {text!r}") from None
    if any(len(p) != 2 for p in pairs):
        raise UsageError("box axes are 'lo,hi' pairs separated by ';'")
    if len(pairs) == 1:
        pairs = pairs * dim
    if len(pairs) != dim:
        raise UsageError(f"box has {len(pairs)} axes, family has dimension {dim}")
    return pairs


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(CSV_TAG + "\n")
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _fmt(v):
    return "" if v is None else v


def _recall_row(r, seed):
    return [r.method, _fmt(r.c), _fmt(r.d), r.nbits, r.k, _fmt(seed), f"{r.mean_recall:.6f}"]


def _load_data(args):
    return load_dataset(args.data, getattr(args, "queries", None), center=getattr(args, "center", False))


def _add_data_args(p, queries=True):
    p.add_argument("--data", required=True, help="record vectors (.fvecs, .csv or idx3 file)")
    if queries:
        p.add_argument("--queries", help="query vectors; records double as queries when omitted")
    p.add_argument("--center", action="store_true", help="subtract the record mean from records and queries")


def _resolve_k(args, n_records):
    if args.k is not None:
        return args.k
    return default_k(n_records, args.k_percent)


def _add_k_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--k", type=_positive_int)
    g.add_argument("--k-percent", type=float, default=1.0, help="k as a percentage of the record count (default 1.0)")


# ------------------------------------------------------------------ subcommands


def cmd_gen(args):
    ds = gen_synthetic(args.dim, args.records, args.queries, args.seed)
    out = Path(args.out)
    rec, qry = Path(f"{out}.records.fvecs"), Path(f"{out}.queries.fvecs")
    try:
        write_fvecs(rec, ds.records)
        write_fvecs(qry, ds.queries)
    except OSError as exc:
        raise FormatError(f"cannot write output: {exc}") from None
    print(f"wrote {ds.records.shape[0]} records to {rec} and {ds.queries.shape[0]} queries to {qry} (dim {ds.dim}, seed {args.seed})")
    return EXIT_OK


def cmd_hash(args):
    if args.method != "eh" and (args.c is not None or args.d is not None):
        raise UsageError("--c and --d only apply to --method eh")
    ds = _load_data(args)
    if args.family:
        family = load_family(args.family)
        if family.method != args.method:
            raise UsageError(f"--family holds a {family.method} family, not {args.method}")
        if family.dim != ds.dim:
            raise FormatError(f"family dimension {family.dim} does not match data dimension {ds.dim}")
        seed = args.seed
    else:
        if args.seed is None:
            raise UsageError("sampling a family requires --seed")
        if args.bits is None:
            raise UsageError("sampling a family requires --bits")
        if args.method == "eh" and args.d is None:
            raise UsageError("--method eh requires --d")
        family = sample_family(args.method, ds.dim, args.bits, args.seed,
                               c=0.0 if args.c is None else args.c, d=1.0 if args.d is None else args.d)
        seed = args.seed
    if args.family_out:
        save_family(family, args.family_out, seed=seed)
    meta = {"method": family.method, "seed": seed}
    if isinstance(family, EclipseFamily):
        meta.update(c=family.c, d=family.d)
    codes = family.hash_batch(ds.records)
    save_codes(args.codes_out, codes, **meta)
    msg = f"{family.method}: {len(codes)} codes of {family.nbits} bits -> {args.codes_out}"
    if args.query_codes_out:
        qcodes = family.hash_batch(ds.queries)
        save_codes(args.query_codes_out, qcodes, **meta)
        msg += f"; {len(qcodes)} query codes -> {args.query_codes_out}"
    print(msg)
    return EXIT_OK


def cmd_eval(args):
    ds = _load_data(args)
    codes, meta = load_codes(args.codes)
    qcodes, qmeta = load_codes(args.query_codes)
    if len(codes) != ds.records.shape[0] or len(qcodes) != ds.queries.shape[0]:
        raise FormatError("code counts do not match the record/query counts of --data/--queries")
    if codes.nbits != qcodes.nbits:
        raise FormatError("record and query codes have different lengths")
    k = _resolve_k(args, ds.records.shape[0])
    if k > ds.records.shape[0]:
        raise UsageError(f"k={k} exceeds the record count")
    value = recall_from_codes(exact_neighbors(ds, k), codes, qcodes, k)
    row = {"method": meta.get("method"), "c": meta.get("c"), "d": meta.get("d"), "B": codes.nbits,
           "k": k, "seed": meta.get("seed"), "mean_recall": value}
    if args.format == "json" or (args.format is None and str(args.out).endswith(".json")):
        Path(args.out).write_text(json.dumps(row, indent=2) + "\n")
    else:
        _write_csv(args.out, RESULT_COLUMNS,
                   [[_fmt(row[c]) if c != "mean_recall" else f"{value:.6f}" for c in RESULT_COLUMNS]])
    print(f"{row['method']} B={codes.nbits} k={k}: mean recall {value:.4f}")
    return EXIT_OK


def cmd_sweep(args):
    ds = _load_data(args)
    k = _resolve_k(args, ds.records.shape[0])
    default = SweepGrid.default(ds)
    grid = SweepGrid(args.c_grid or default.c_values, args.d_grid or default.d_values)
    baselines = [m for m in args.methods if m != "eh"]
    with_eh = "eh" in args.methods
    if not with_eh:
        grid = SweepGrid((0.0,), (1.0,))
    counter = {"n": 0}

    def tick(_res):
        counter["n"] += 1
        print(f"\r{counter['n']}/{len(grid.c_values) * len(grid.d_values)} cells", end="", file=sys.stderr)

    res = sweep(ds, grid, args.bits, k, args.seed, baselines=baselines, progress=tick if with_eh else None)
    if with_eh:
        print(file=sys.stderr)
    rows = [_recall_row(r, args.seed) for r in res.baselines]
    if with_eh:
        rows += [_recall_row(r, args.seed) for r in res.eh]
        rows.append(["opt", res.c_opt, res.d_opt, args.bits, k, args.seed, f"{res.best_recall:.6f}"])
    _write_csv(args.out, RESULT_COLUMNS, rows)
    for r in res.baselines:
        print(f"{r.method}: {r.mean_recall:.4f}")
    if with_eh:
        ds_star = d_star(ds)
        print(f"eh best: {res.best_recall:.4f} at c_opt={res.c_opt:g}, d_opt={res.d_opt:.4g}")
        print(f"d_* = {ds_star.value:.4g}   d_opt = {res.d_opt:.4g}   d_opt/d_* = {res.d_opt / ds_star.value:.3f}")
    return EXIT_OK


def cmd_ratio(args):
    ds = load_dataset(args.data, center=args.center)
    grid = args.d_grid or list(SweepGrid.default(ds).d_values)
    curve = ratio_curve(ds, grid)
    _write_csv(args.out, ["d", "ratio"], [[repr(float(d)), f"{r:.6f}"] for d, r in zip(grid, curve)])
    star = d_star(ds, grid if curve[-1] > 0.99 else None)
    line = f"{ds.name}: d_* = {star.value:.6g}"
    if star.grid_value is not None:
        line += f" (first grid point past 0.99: {star.grid_value:.6g})"
    print(line)
    return EXIT_OK


def cmd_bench(args):
    if args.data:
        data = load_dataset(args.data).records
    else:
        if args.seed is None:
            raise UsageError("synthetic benchmark data requires --seed")
        data = gen_synthetic(args.dim, args.vectors, 1, args.seed).records
    seed = 0 if args.seed is None else args.seed
    rows = []
    for nbits in args.bits_list:
        for m in args.methods:
            fam = sample_family(m, data.shape[1], nbits, seed, c=0.0, d=1.0)
            t = bench_hash(fam, data, repeats=args.repeats)
            rows.append([m, nbits, t.dim, t.vectors_hashed, f"{t.per_vector:.6e}", t.backend])
            print(f"{m} B={nbits}: {t.per_vector * 1e6:.2f} us/vector ({t.backend})")
    _write_csv(args.out, ["method", "B", "N", "vectors", "per_vector_seconds", "backend"], rows)
    return EXIT_OK


def _family_from_params(method, params, dim):
    try:
        if method == "lh":
            fam = LinearHyperplaneFamily(np.asarray(params["W"], dtype=float))
        elif method == "ah":
            fam = AffineHyperplaneFamily(np.asarray(params["W"], dtype=float), np.asarray(params["b"], dtype=float))
        elif method == "hs":
            fam = HypersphereFamily(np.asarray(params["centers"], dtype=float), np.asarray(params["radii"], dtype=float))
        else:
            fam = EclipseFamily(np.asarray(params["Wt"], dtype=float), np.asarray(params["C"], dtype=float), float(params["d"]))
    except KeyError as exc:
        raise UsageError(f"--params for {method} is missing {exc}") from None
    if dim is not None and fam.dim != dim:
        raise UsageError(f"--params describe a {fam.dim}-dimensional family, --dim is {dim}")
    return fam


def cmd_connectivity(args):
    if args.family:
        family = load_family(args.family)
        if family.method != args.method:
            raise UsageError(f"--family holds a {family.method} family, not {args.method}")
    elif args.params:
        try:
            params = json.loads(args.params)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--params is not valid JSON: {exc.msg}") from None
        family = _family_from_params(args.method, params, args.dim)
    else:
        if args.seed is None or args.bits is None or args.dim is None:
            raise UsageError("sampling a family requires --seed, --bits and --dim")
        if args.method == "eh" and args.d is None:
            raise UsageError("--method eh requires --d")
        family = sample_family(args.method, args.dim, args.bits, args.seed,
                               c=0.0 if args.c is None else args.c, d=1.0 if args.d is None else args.d)
    box = _box(args.box, family.dim)
    counts = connectivity_check(family, box, args.resolution, compactify=not args.no_compactify)
    payload = {"method": family.method, "dim": family.dim, "B": family.nbits, "box": box,
               "resolution": args.resolution, "compactified": not args.no_compactify,
               "seed": args.seed, "components": counts}
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    split = {c: n for c, n in counts.items() if n > 1}
    print(f"{len(counts)} codes, {len(split)} with more than one component")
    if family.method == "eh" and split:
        raise InvariantViolation(f"eclipse family has disconnected code regions: {split}")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser():
    p = _Parser(prog="eclipsehash", description="Eclipse hashing and baseline binary hashing experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=_positive_int, default=None, help="cap BLAS worker threads")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a synthetic Gaussian dataset as an fvecs pair")
    g.add_argument("--dim", type=_positive_int, default=512)
    g.add_argument("--records", type=_positive_int, default=10_000)
    g.add_argument("--queries", type=_positive_int, default=1_000)
    g.add_argument("--seed", type=_seed, required=True)
    g.add_argument("--out", required=True, help="output prefix; writes PREFIX.records.fvecs and PREFIX.queries.fvecs")
    g.set_defaults(func=cmd_gen)

    h = sub.add_parser("hash", help="sample or load a family and hash a dataset")
    h.add_argument("--method", choices=METHODS, required=True)
    h.add_argument("--bits", type=_positive_int)
    h.add_argument("--c", type=float)
    h.add_argument("--d", type=float)
    h.add_argument("--seed", type=_seed)
    _add_data_args(h)
    h.add_argument("--family", help="load the family from this file instead of sampling")
    h.add_argument("--family-out")
    h.add_argument("--codes-out", required=True)
    h.add_argument("--query-codes-out")
    h.set_defaults(func=cmd_hash)

    e = sub.add_parser("eval", help="mean recall of precomputed codes")
    e.add_argument("--codes", required=True)
    e.add_argument("--query-codes", required=True)
    _add_data_args(e)
    _add_k_args(e)
    e.add_argument("--format", choices=("csv", "json"))
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="EH recall over a (c, d) grid plus baselines")
    s.add_argument("--methods", type=_methods, default=list(METHODS))
    s.add_argument("--c-grid", type=_floats)
    s.add_argument("--d-grid", type=_floats)
    s.add_argument("--bits", type=_positive_int, default=1024)
    s.add_argument("--seed", type=_seed, required=True)
    _add_data_args(s)
    _add_k_args(s)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("ratio", help="Ratio(d) curve and d_*")
    _add_data_args(r, queries=False)
    r.add_argument("--d-grid", type=_floats)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_ratio)

    b = sub.add_parser("bench", help="time hashing for each method and code length")
    b.add_argument("--methods", type=_methods, default=list(METHODS))
    b.add_argument("--bits-list", type=_ints, default=[64, 256, 1024])
    b.add_argument("--dim", type=_positive_int, default=512)
    b.add_argument("--vectors", type=_positive_int, default=10_000)
    b.add_argument("--data")
    b.add_argument("--repeats", type=_positive_int, default=5)
    b.add_argument("--seed", type=_seed)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("connectivity", help="count connected components per code on a grid")
    c.add_argument("--method", choices=METHODS, required=True)
    c.add_argument("--params", help="explicit family parameters as JSON")
    c.add_argument("--family")
    c.add_argument("--dim", type=int, choices=(1, 2, 3))
    c.add_argument("--bits", type=_positive_int)
    c.add_argument("--c", type=float)
    c.add_argument("--d", type=float)
    c.add_argument("--seed", type=_seed)
    c.add_argument("--box", required=True, help="'lo,hi' for every axis, or 'lo,hi;lo,hi' per axis")
    c.add_argument("--resolution", type=int, default=512)
    c.add_argument("--no-compactify", action="store_true", help="do not join border cells through infinity")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_connectivity)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads:
        # the numba kernels run serially, so BLAS is the only thread pool
        limits = threadpool_limits(limits=args.threads)
    else:
        limits = nullcontext()
    try:
        with limits:
            return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"eclipsehash: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"eclipsehash: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ParameterError as exc:
        print(f"eclipsehash: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EclipseHashError, OSError) as exc:
        print(f"eclipsehash: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
