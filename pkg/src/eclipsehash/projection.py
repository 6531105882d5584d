"""Inverse stereographic projection onto the unit sphere in R^(N+1).

``inverse_stereographic`` sends ``x`` in R^N to

    (2 d x / (d^2 + r^2),  (r^2 - d^2) / (d^2 + r^2)),   r = |x|,

so the origin lands on the south pole, the sphere ``|x| = d`` on the
equator and infinity on the north pole ``(0, ..., 0, 1)``. A hyperplane in
R^(N+1) that meets the unit sphere cuts it along a set whose image in R^N
is a hypersphere, or an affine hyperplane when the cut passes through the
north pole (see :func:`induced_shape`).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NoIntersectionError, ParameterError, PoleError

POLE_EPS = 1e-12
PLANE_RTOL = 1e-12
# below this, r^2 and d^2 cannot overflow or lose all precision
_SAFE = 1e150


def _check_d(d):
    if not (np.isfinite(d) and d > 0):
        raise ParameterError(f"projection parameter d must be a positive real, got {d}")


def _lift(x, d):
    with np.errstate(over="ignore"):
        r2 = np.sum(x * x, axis=-1, keepdims=True)
    if d < _SAFE and 1.0 / _SAFE < d and np.all(r2 < _SAFE * _SAFE):
        den = d * d + r2
        out = np.empty(x.shape[:-1] + (x.shape[-1] + 1,), dtype=np.float64)
        np.multiply(x, 2.0 * d / den, out=out[..., :-1])
        np.divide(r2 - d * d, den, out=out[..., -1:])
        return out
    return _lift_scaled(x, d)


def _lift_scaled(x, d):
    # Both branches are the same rational map; they differ only in which of
    # r and d is factored out so neither r^2 nor d^2 can overflow.
    scale = np.max(np.abs(x), axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    v = x / safe
    rho = np.sqrt(np.sum(v * v, axis=-1, keepdims=True))
    r = scale * rho
    out = np.empty(x.shape[:-1] + (x.shape[-1] + 1,), dtype=np.float64)

    big = r >= d
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # r >= d: divide through by r^2
        t = d / np.where(big, r, 1.0)
        unit = v / np.where(rho > 0, rho, 1.0)
        den_b = 1.0 + t * t
        head_b = 2.0 * t * unit / den_b
        tail_b = (1.0 - t * t) / den_b
        # r < d: divide through by d^2
        s = r / d
        den_s = 1.0 + s * s
        head_s = 2.0 * (x / d) / den_s
        tail_s = (s * s - 1.0) / den_s

    out[..., :-1] = np.where(big, head_b, head_s)
    out[..., -1:] = np.where(big, tail_b, tail_s)
    return out


def inverse_stereographic(x, d: float) -> np.ndarray:
    """Map one vector (shape ``(N,)``) or a batch (``(M, N)``) onto the unit sphere."""
    _check_d(d)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] < 1:
        raise DimensionError(f"expected shape (N,) or (M, N), got {x.shape}")
    if not np.isfinite(x).all():
        raise ParameterError("feature vectors must be finite")
    return _lift(x, float(d))


def stereographic(p, d: float) -> np.ndarray:
    """Inverse of :func:`inverse_stereographic`: ``x_i = d p_i / (1 - p_{N+1})``."""
    _check_d(d)
    p = np.asarray(p, dtype=np.float64)
    if p.ndim not in (1, 2) or p.shape[-1] < 2:
        raise DimensionError(f"expected shape (N+1,) or (M, N+1) with N >= 1, got {p.shape}")
    gap = 1.0 - p[..., -1:]
    if np.any(gap <= POLE_EPS):
        raise PoleError("point lies at or too close to the north pole")
    return d * p[..., :-1] / gap


@dataclass(frozen=True)
class AffinePlane:
    """``normal . x + offset = 0`` in R^N."""

    normal: np.ndarray
    offset: float

    def side(self, x):
        return np.asarray(x) @ self.normal + self.offset


@dataclass(frozen=True)
class Hypersphere:
    center: np.ndarray
    radius: float

    def inside(self, x):
        diff = np.asarray(x) - self.center
        return np.sum(diff * diff, axis=-1) < self.radius**2


def induced_shape(normal, offset: float, d: float):
    """Image in R^N of ``{normal . p + offset = 0} ∩ S`` under stereographic projection.

    Returns :class:`AffinePlane` when the cut contains the north pole
    (``normal[-1] == -offset`` up to a relative tolerance of 1e-12) and a
    :class:`Hypersphere` otherwise.
    """
    _check_d(d)
    n = np.asarray(normal, dtype=np.float64)
    if n.ndim != 1 or n.size < 2:
        raise DimensionError("normal must have length N+1 >= 2")
    norm2 = float(n @ n)
    if norm2 == 0.0:
        raise ParameterError("normal must be nonzero")
    b = float(offset)
    if b * b > norm2 * (1.0 + 1e-12):
        raise NoIntersectionError(f"plane at distance {abs(b) / np.sqrt(norm2):.6g} misses the unit sphere")

    a = n[-1] + b
    scale = np.sqrt(norm2 + b * b)
    if abs(a) <= PLANE_RTOL * scale:
        return AffinePlane(normal=n[:-1].copy(), offset=d * b)

    center = -d * n[:-1] / a
    radius_sq = d * d / (a * a) * (norm2 - b * b)
    if radius_sq < 0:
        raise NoIntersectionError("plane misses the unit sphere")
    return Hypersphere(center=center, radius=float(np.sqrt(max(radius_sq, 0.0))))
