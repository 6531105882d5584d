import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eclipsehash.errors import NoIntersectionError, ParameterError, PoleError
from eclipsehash.projection import (
    AffinePlane,
    Hypersphere,
    induced_shape,
    inverse_stereographic,
    stereographic,
)


def _random_points(rng, count, dim, max_ratio, d):
    # radii spread log-uniformly up to max_ratio * d
    u = rng.standard_normal((count, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = d * np.exp(rng.uniform(np.log(1e-3), np.log(max_ratio), count))
    return u * r[:, None]


class TestInverseStereographic:
    def test_origin_goes_to_south_pole(self):
        for n in (1, 3, 17):
            p = inverse_stereographic(np.zeros(n), 2.5)
            assert p.tolist() == [0.0] * n + [-1.0]

    def test_hand_example(self):
        assert np.allclose(inverse_stereographic([1.0], 2.0), [0.8, -0.6], atol=1e-15)

    def test_sphere_of_radius_d_lands_on_equator(self, rng):
        x = rng.standard_normal((50, 6))
        x *= 3.0 / np.linalg.norm(x, axis=1, keepdims=True)
        assert np.allclose(inverse_stereographic(x, 3.0)[:, -1], 0.0, atol=1e-15)

    def test_bad_d(self):
        for d in (0.0, -1.0, np.inf, np.nan):
            with pytest.raises(ParameterError):
                inverse_stereographic([1.0], d)

    def test_batch_matches_single(self, rng):
        x = rng.standard_normal((20, 4))
        batch = inverse_stereographic(x, 1.7)
        for row, p in zip(x, batch):
            assert np.array_equal(inverse_stereographic(row, 1.7), p)

    @settings(max_examples=300)
    @given(arrays(np.float64, st.integers(1, 8), elements=st.floats(-1e300, 1e300, allow_nan=False)),
           st.floats(1e-200, 1e200))
    def test_unit_norm_for_all_finite_inputs(self, x, d):
        p = inverse_stereographic(x, d)
        assert np.all(np.isfinite(p))
        assert abs(np.linalg.norm(p) - 1.0) <= 1e-9
        assert -1.0 <= p[-1] <= 1.0

    def test_unit_norm_large_n(self, rng):
        x = rng.standard_normal((200, 2048)) * 40
        p = inverse_stereographic(x, 3.0)
        assert np.max(np.abs(np.linalg.norm(p, axis=1) - 1.0)) <= 1e-9

    @settings(max_examples=300)
    @given(arrays(np.float64, st.integers(1, 5), elements=st.floats(-1e6, 1e6, allow_nan=False)),
           st.floats(1e-3, 1e3))
    def test_south_hemisphere_iff_inside_radius_d(self, x, d):
        r = np.sqrt(np.sum(x * x))
        last = inverse_stereographic(x, d)[-1]
        if r != d:
            assert (last < 0) == (r < d)


class TestStereographic:
    def test_south_pole(self):
        assert stereographic([0.0, 0.0, -1.0], 4.0).tolist() == [0.0, 0.0]

    def test_hand_example(self):
        assert np.allclose(stereographic([0.8, -0.6], 2.0), [1.0], rtol=1e-15)

    def test_pole_guard(self):
        with pytest.raises(PoleError):
            stereographic([0.0, 1.0], 1.0)
        with pytest.raises(PoleError):
            stereographic([1e-7, 1.0 - 1e-13], 1.0)

    def test_round_trip(self, rng):
        for d in (1e-3, 0.5, 7.0, 1e4):
            x = _random_points(rng, 2000, 5, 1e3, d)
            back = stereographic(inverse_stereographic(x, d), d)
            err = np.linalg.norm(back - x, axis=1) / np.linalg.norm(x, axis=1)
            assert err.max() <= 1e-9


class TestLimits:
    def test_far_field_near_north_pole(self, rng):
        d = 1.0
        x = _random_points(rng, 500, 4, 1e3, d)
        x = x[np.linalg.norm(x, axis=1) >= 1e3 * d]
        x = np.vstack([x, rng.standard_normal((200, 4)) * 1e5])
        r = np.linalg.norm(x, axis=1, keepdims=True)
        approx = np.hstack([2 * d * x / r**2, np.ones_like(r)])
        err = np.linalg.norm(inverse_stereographic(x, d) - approx, axis=1)
        assert np.all(err <= 10 * (d / r[:, 0]) ** 2)

    def test_near_field_near_south_pole(self, rng):
        d = 50.0
        x = rng.standard_normal((500, 4))
        x *= (rng.uniform(1e-6, 1e-3, 500) * d / np.linalg.norm(x, axis=1))[:, None]
        r = np.linalg.norm(x, axis=1, keepdims=True)
        approx = np.hstack([2 * x / d, -np.ones_like(r)])
        err = np.linalg.norm(inverse_stereographic(x, d) - approx, axis=1)
        assert np.all(err <= 10 * (r[:, 0] / d) ** 2)


def _circle_on_sphere(normal, offset, count, rng):
    """Points p with |p| = 1 and normal . p + offset = 0 (brute-force parametrisation)."""
    n = np.asarray(normal, float)
    u = n / np.linalg.norm(n)
    center = -offset / np.linalg.norm(n) * u
    rad = np.sqrt(1.0 - np.dot(center, center))
    basis = np.linalg.svd(u[None, :])[2][1:]  # orthonormal complement of u
    g = rng.standard_normal((count, basis.shape[0]))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return center + rad * g @ basis


class TestInducedShape:
    def test_equator(self):
        shape = induced_shape([0.0, 0.0, 1.0], 0.0, 2.5)
        assert isinstance(shape, Hypersphere)
        assert np.allclose(shape.center, 0.0)
        assert shape.radius == pytest.approx(2.5)

    def test_plane_through_north_pole(self):
        shape = induced_shape([0.3, -1.2, 0.5], -0.5, 2.0)
        assert isinstance(shape, AffinePlane)
        assert np.allclose(shape.normal, [0.3, -1.2])
        assert shape.offset == pytest.approx(-1.0)

    def test_n1_example_brute_force(self, rng):
        shape = induced_shape([1.0, 0.5], 0.0, 1.0)
        assert isinstance(shape, Hypersphere)
        assert shape.center.tolist() == [-2.0]
        assert shape.radius == pytest.approx(np.sqrt(5.0), rel=1e-15)
        # in N=1 the cut is two points on the unit circle
        pts = _circle_on_sphere([1.0, 0.5], 0.0, 1000, rng)
        x = stereographic(pts, 1.0)[:, 0]
        assert np.max(np.abs((x + 2.0) ** 2 - 5.0)) <= 1e-9

    def test_random_planes_brute_force(self, rng):
        for _ in range(100):
            n = rng.standard_normal(4)
            b = rng.uniform(-0.9, 0.9) * np.linalg.norm(n)
            d = float(np.exp(rng.uniform(-2, 2)))
            shape = induced_shape(n, b, d)
            pts = _circle_on_sphere(n, b, 1000, rng)
            pts = pts[pts[:, -1] < 1 - 1e-6]
            x = stereographic(pts, d)
            dist = np.linalg.norm(x - shape.center, axis=1)
            assert np.max(np.abs(dist - shape.radius)) <= 1e-7 * max(1.0, shape.radius)

    def test_disjoint_plane(self):
        with pytest.raises(NoIntersectionError):
            induced_shape([0.0, 1.0], 1.5, 1.0)

    def test_zero_normal(self):
        with pytest.raises(ParameterError):
            induced_shape([0.0, 0.0], 0.0, 1.0)

    def test_sign_flips_across_boundary(self, rng):
        # bisect along random segments: the ambient sign changes exactly where
        # the segment crosses the induced sphere
        for _ in range(40):
            n = rng.standard_normal(3)
            b = rng.uniform(-0.8, 0.8) * np.linalg.norm(n)
            d = float(np.exp(rng.uniform(-1, 1)))
            shape = induced_shape(n, b, d)
            for _ in range(25):
                p, q = rng.standard_normal((2, 2)) * 3 * d

                def side(t):
                    return np.sign(n @ inverse_stereographic(p + t * (q - p), d) + b)

                def inside(t):
                    return shape.inside(p + t * (q - p))

                if side(0) == side(1):
                    continue
                lo, hi = 0.0, 1.0
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if side(mid) == side(0):
                        lo = mid
                    else:
                        hi = mid
                x = p + 0.5 * (lo + hi) * (q - p)
                assert abs(np.linalg.norm(x - shape.center) - shape.radius) <= 1e-8 * max(1, shape.radius)
                assert inside(0) != inside(1)
