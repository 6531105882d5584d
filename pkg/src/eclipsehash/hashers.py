"""Hash families: linear (LH) and affine (AH) hyperplanes, hyperspheres (HS)
and Eclipse hashing (EH).

Every family maps an ``(M, N)`` array of feature vectors to ``M`` codes of
``B`` bits. All comparisons are strict, so points on a boundary get bit 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from . import _kernels
from .core import BitCode, PackedCodes, rng_stream, sample_standard_normal_matrix
from .errors import DimensionError, ParameterError
from .projection import Hypersphere, induced_shape, inverse_stereographic

METHODS = ("lh", "ah", "hs", "eh")

# Stream names. LH and AH (and HS centers) draw their B x N matrix from the
# same stream so that one seed gives them identical normals.
_NORMALS = "family.normals"
_OFFSETS = "family.offsets"
_RADII = "family.radii"
_ECLIPSE = "family.eclipse"


def _as_matrix(x, dim):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise DimensionError(f"expected vectors of length {dim}, got shape {x.shape}")
    return np.ascontiguousarray(x)


def _check_rows(mat, what):
    if mat.ndim != 2 or mat.shape[0] < 1:
        raise ParameterError(f"{what} must be a nonempty 2-D array")
    if not np.all(np.any(mat != 0, axis=1)):
        raise ParameterError(f"{what} has a zero row")


class _Family:
    method: ClassVar[str]

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def nbits(self) -> int:
        raise NotImplementedError

    def bits(self, x) -> np.ndarray:
        """Boolean ``(M, B)`` matrix of hash bits."""
        raise NotImplementedError

    def hash(self, x) -> BitCode:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise DimensionError("hash() takes a single vector; use hash_batch()")
        return self.hash_batch(x[None, :])[0]

    def hash_batch(self, x) -> PackedCodes:
        x = _as_matrix(x, self.dim)
        if x.shape[0] == 0:
            return PackedCodes(np.zeros((0, _kernels.n_words(self.nbits)), np.uint64), self.nbits)
        return PackedCodes.from_bools(self.bits(x))

    def code_at_infinity(self):
        """Bits shared by every point far enough from the origin, or None."""
        return None


@dataclass(frozen=True, eq=False)
class LinearHyperplaneFamily(_Family):
    W: np.ndarray
    method: ClassVar[str] = "lh"

    def __post_init__(self):
        _check_rows(np.asarray(self.W), "W")

    @property
    def dim(self):
        return self.W.shape[1]

    @property
    def nbits(self):
        return self.W.shape[0]

    def bits(self, x):
        x = _as_matrix(x, self.dim)
        return x @ self.W.T > 0


@dataclass(frozen=True, eq=False)
class AffineHyperplaneFamily(_Family):
    W: np.ndarray
    b: np.ndarray
    method: ClassVar[str] = "ah"

    def __post_init__(self):
        _check_rows(np.asarray(self.W), "W")
        if np.shape(self.b) != (self.W.shape[0],):
            raise ParameterError("need one offset per hyperplane")

    @property
    def dim(self):
        return self.W.shape[1]

    @property
    def nbits(self):
        return self.W.shape[0]

    def bits(self, x):
        x = _as_matrix(x, self.dim)
        return x @ self.W.T + self.b > 0


@dataclass(frozen=True, eq=False)
class HypersphereFamily(_Family):
    centers: np.ndarray
    radii: np.ndarray
    method: ClassVar[str] = "hs"

    def __post_init__(self):
        c = np.asarray(self.centers)
        if c.ndim != 2 or c.shape[0] < 1:
            raise ParameterError("centers must be a nonempty 2-D array")
        if np.shape(self.radii) != (c.shape[0],) or not np.all(np.asarray(self.radii) > 0):
            raise ParameterError("need one positive radius per sphere")

    @property
    def dim(self):
        return self.centers.shape[1]

    @property
    def nbits(self):
        return self.centers.shape[0]

    def bits(self, x):
        # Direct sum of squared differences; the |x|^2 - 2 x.p + |p|^2
        # expansion would turn this into a matrix product but moves points
        # across the strict boundary through cancellation.
        x = _as_matrix(x, self.dim)
        return _kernels.inside_spheres(
            x, np.ascontiguousarray(self.centers, dtype=np.float64), self.radii**2
        )

    def code_at_infinity(self):
        return np.zeros(self.nbits, dtype=bool)


@dataclass(frozen=True, eq=False)
class EclipseFamily(_Family):
    """Hyperplanes through a common point ``C`` applied after lifting to the sphere."""

    Wt: np.ndarray
    C: np.ndarray
    d: float
    method: ClassVar[str] = "eh"

    def __post_init__(self):
        _check_rows(np.asarray(self.Wt), "Wt")
        if np.shape(self.C) != (self.Wt.shape[1],):
            raise ParameterError("C must have length N+1")
        if float(np.linalg.norm(self.C)) > 1 + 1e-12:
            raise ParameterError("common intersection C must lie inside or on the unit sphere")
        if not (np.isfinite(self.d) and self.d > 0):
            raise ParameterError(f"d must be positive, got {self.d}")

    @property
    def dim(self):
        return self.Wt.shape[1] - 1

    @property
    def nbits(self):
        return self.Wt.shape[0]

    @property
    def c(self) -> float:
        return float(self.C[-1])

    @property
    def offsets(self) -> np.ndarray:
        """Ambient offsets ``-n . C`` so each bit is ``n . p + offset > 0``."""
        return -(self.Wt @ self.C)

    def lift(self, x):
        return inverse_stereographic(_as_matrix(x, self.dim), self.d) - self.C

    def bits(self, x):
        return self.lift(x) @ self.Wt.T > 0

    def code_at_infinity(self):
        north = np.zeros(self.dim + 1)
        north[-1] = 1.0
        return (north - self.C) @ self.Wt.T > 0

    def row_shape(self, k):
        """Shape induced in R^N by hyperplane ``k``."""
        return induced_shape(self.Wt[k], self.offsets[k], self.d)

    def row_flip(self, k) -> bool:
        """True when bit ``k`` is 1 *outside* its induced hypersphere."""
        return bool(self.code_at_infinity()[k])


Family = LinearHyperplaneFamily | AffineHyperplaneFamily | HypersphereFamily | EclipseFamily


# ------------------------------------------------------------------ sampling

def _check_sizes(n, b):
    if n < 1 or b < 1:
        raise ParameterError(f"N and B must be >= 1, got N={n}, B={b}")


def sample_lh(n: int, nbits: int, seed: int) -> LinearHyperplaneFamily:
    _check_sizes(n, nbits)
    return LinearHyperplaneFamily(sample_standard_normal_matrix(nbits, n, rng_stream(seed, _NORMALS)))


def sample_ah(n: int, nbits: int, seed: int) -> AffineHyperplaneFamily:
    _check_sizes(n, nbits)
    W = sample_standard_normal_matrix(nbits, n, rng_stream(seed, _NORMALS))
    b = rng_stream(seed, _OFFSETS).uniform(0.0, 1.0, nbits)
    return AffineHyperplaneFamily(W, b)


def sample_hs(n: int, nbits: int, seed: int) -> HypersphereFamily:
    _check_sizes(n, nbits)
    centers = sample_standard_normal_matrix(nbits, n, rng_stream(seed, _NORMALS))
    rng = rng_stream(seed, _RADII)
    z = np.abs(rng.standard_normal(nbits))
    while np.any(z == 0):
        bad = z == 0
        z[bad] = np.abs(rng.standard_normal(int(bad.sum())))
    return HypersphereFamily(centers, np.sqrt(n) * z)


def sample_eh(n: int, nbits: int, c: float, d: float, seed: int) -> EclipseFamily:
    _check_sizes(n, nbits)
    if not -1.0 <= c <= 1.0:
        raise ParameterError(f"c must lie in [-1, 1], got {c}")
    if not (np.isfinite(d) and d > 0):
        raise ParameterError(f"d must be positive, got {d}")
    Wt = sample_standard_normal_matrix(nbits, n + 1, rng_stream(seed, _ECLIPSE))
    C = np.zeros(n + 1)
    C[-1] = c
    return EclipseFamily(Wt, C, float(d))


def sample_family(method: str, n: int, nbits: int, seed: int, c: float = 0.0, d: float = 1.0):
    method = method.lower()
    if method == "lh":
        return sample_lh(n, nbits, seed)
    if method == "ah":
        return sample_ah(n, nbits, seed)
    if method == "hs":
        return sample_hs(n, nbits, seed)
    if method == "eh":
        return sample_eh(n, nbits, c, d, seed)
    raise ParameterError(f"unknown method {method!r}; expected one of {METHODS}")


# ------------------------------------------------------------------ hashing

def hash_lh(family: LinearHyperplaneFamily, x) -> BitCode:
    return family.hash(x)


def hash_ah(family: AffineHyperplaneFamily, x) -> BitCode:
    return family.hash(x)


def hash_hs(family: HypersphereFamily, x) -> BitCode:
    return family.hash(x)


def hash_eh(family: EclipseFamily, x) -> BitCode:
    return family.hash(x)


def batch_hash(family, data) -> PackedCodes:
    """Hash every row of ``data`` (an ``(M, N)`` array or list of vectors)."""
    if isinstance(data, (list, tuple)) and len(data) == 0:
        return PackedCodes(np.zeros((0, _kernels.n_words(family.nbits)), np.uint64), family.nbits)
    return family.hash_batch(np.asarray(data, dtype=np.float64))


def sphere_of_row(family: EclipseFamily, k: int) -> Hypersphere | None:
    shape = family.row_shape(k)
    return shape if isinstance(shape, Hypersphere) else None
