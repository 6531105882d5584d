"""Binary hashing for similarity search: Eclipse hashing (hyperplanes
through a common point, applied after inverse stereographic projection)
and linear, affine and hypersphere baselines."""

__version__ = "0.1.0"

from ._accel import USE_NUMBA, backend
from .core import BitCode, Dataset, PackedCodes, hamming_distance, pack_bits, rng_stream, spherical_hamming_distance
from .hashers import (
    AffineHyperplaneFamily,
    EclipseFamily,
    HypersphereFamily,
    LinearHyperplaneFamily,
    batch_hash,
    sample_ah,
    sample_eh,
    sample_family,
    sample_hs,
    sample_lh,
)
from .evaluation import SweepGrid, bench_hash, connectivity_check, d_star, mean_recall, ratio, sweep
from .io import center_dataset, gen_synthetic, load_dataset, load_family, save_family
from .projection import induced_shape, inverse_stereographic, stereographic
from .search import knn_hamming, knn_hamming_batch, knn_l2, knn_l2_batch

__all__ = [
    "USE_NUMBA", "backend",
    "BitCode", "Dataset", "PackedCodes", "hamming_distance", "pack_bits", "rng_stream",
    "spherical_hamming_distance",
    "AffineHyperplaneFamily", "EclipseFamily", "HypersphereFamily", "LinearHyperplaneFamily",
    "batch_hash", "sample_ah", "sample_eh", "sample_family", "sample_hs", "sample_lh",
    "SweepGrid", "bench_hash", "connectivity_check", "d_star", "mean_recall", "ratio", "sweep",
    "center_dataset", "gen_synthetic", "load_dataset", "load_family", "save_family",
    "induced_shape", "inverse_stereographic", "stereographic",
    "knn_hamming", "knn_hamming_batch", "knn_l2", "knn_l2_batch",
]
