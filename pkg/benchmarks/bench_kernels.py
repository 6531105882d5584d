"""Time each hot kernel in its numba and numpy flavour.

    python3 benchmarks/bench_kernels.py [--records 10000] [--queries 100] [--bits 1024] [--dim 512]

Both flavours are imported directly, so the ECLIPSEHASH_NUMBA flag does not
matter here. Each timing is the median of several runs after one warm-up
call (which also triggers numba compilation).
"""
import argparse
import statistics
import time

import numpy as np
from threadpoolctl import threadpool_limits

from eclipsehash import _kernels as K
from eclipsehash._accel import HAVE_NUMBA


def median_time(fn, repeats):
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--records", type=int, default=10_000)
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--bits", type=int, default=1024)
    p.add_argument("--dim", type=int, default=512)
    p.add_argument("--spheres", type=int, default=256, help="hypersphere count for the inside-sphere kernel")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    k = max(1, args.records // 100)
    bits = rng.random((args.records, args.bits)) < 0.5
    qbits = rng.random((args.queries, args.bits)) < 0.5
    codes, qcodes = K.pack_rows_np(bits), K.pack_rows_np(qbits)
    x = rng.standard_normal((args.records, args.dim))
    q = rng.standard_normal((args.queries, args.dim))
    hs_x = x[: max(1, args.records // 10)]
    centers = rng.standard_normal((args.spheres, args.dim))
    radii_sq = rng.random(args.spheres) * 2 * args.dim

    cases = [
        ("pack_rows", lambda: K.pack_rows_nb(bits), lambda: K.pack_rows_np(bits)),
        ("hamming_to_all", lambda: K.hamming_to_all_nb(codes, qcodes[0]), lambda: K.hamming_to_all_np(codes, qcodes[0])),
        ("knn_hamming", lambda: K.knn_hamming_nb(codes, qcodes, k, args.bits), lambda: K.knn_hamming_np(codes, qcodes, k)),
        ("knn_l2", lambda: K.knn_l2_nb(x, q, k), lambda: K.knn_l2_np(x, q, k)),
        ("inside_spheres", lambda: K.inside_spheres_nb(hs_x, centers, radii_sq),
         lambda: K.inside_spheres_np(hs_x, centers, radii_sq)),
    ]
    print(f"records={args.records} queries={args.queries} B={args.bits} N={args.dim} k={k} single thread")
    print(f"{'kernel':<16}{'numba (ms)':>12}{'numpy (ms)':>12}{'numpy/numba':>13}")
    with threadpool_limits(limits=1):
        for name, nb, npy in cases:
            t_nb = median_time(nb, args.repeats)
            t_np = median_time(npy, args.repeats)
            print(f"{name:<16}{t_nb * 1e3:>12.2f}{t_np * 1e3:>12.2f}{t_np / t_nb:>12.2f}x")


if __name__ == "__main__":
    main()
