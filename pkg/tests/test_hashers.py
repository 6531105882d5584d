import numpy as np
import pytest

from eclipsehash.core import PackedCodes
from eclipsehash.errors import DimensionError, ParameterError
from eclipsehash.hashers import (
    AffineHyperplaneFamily,
    EclipseFamily,
    HypersphereFamily,
    LinearHyperplaneFamily,
    batch_hash,
    hash_ah,
    hash_eh,
    hash_hs,
    hash_lh,
    sample_ah,
    sample_eh,
    sample_family,
    sample_hs,
    sample_lh,
)
from eclipsehash.projection import AffinePlane, Hypersphere, inverse_stereographic


class TestSampling:
    def test_lh_shape_and_determinism(self):
        f = sample_lh(2, 3, 5)
        assert f.W.shape == (3, 2)
        assert np.array_equal(f.W, sample_lh(2, 3, 5).W)
        assert np.any(f.W != sample_lh(2, 3, 6).W)

    def test_lh_moments(self):
        W = sample_lh(100, 1000, 1).W
        assert abs(W.mean()) <= 0.02 and 0.97 <= W.var() <= 1.03

    def test_ah_offsets(self):
        f = sample_ah(4, 100_000, 2)
        assert f.W.shape == (100_000, 4) and f.b.shape == (100_000,)
        assert f.b.min() >= 0.0 and f.b.max() <= 1.0
        assert 0.497 <= f.b.mean() <= 0.503

    def test_lh_and_ah_share_normals(self):
        assert np.array_equal(sample_lh(8, 16, 3).W, sample_ah(8, 16, 3).W)

    def test_hs_radii(self):
        n = 16
        f = sample_hs(n, 100_000, 4)
        assert np.all(f.radii > 0)
        expected = np.sqrt(n) * np.sqrt(2 / np.pi)
        assert abs(f.radii.mean() / expected - 1) <= 0.01
        c = f.centers
        assert abs(c.mean()) <= 0.02 and 0.97 <= c.var() <= 1.03

    def test_eh(self):
        f = sample_eh(5, 7, 0.0, 2.0, 1)
        assert f.Wt.shape == (7, 6)
        assert np.array_equal(f.C, np.zeros(6))
        assert sample_eh(5, 7, 0.4, 2.0, 1).C.tolist() == [0, 0, 0, 0, 0, 0.4]
        # (c, d) do not change the sampled normals
        assert np.array_equal(f.Wt, sample_eh(5, 7, -0.3, 9.0, 1).Wt)

    @pytest.mark.parametrize("c", [1.5, -1.01])
    def test_eh_c_out_of_range(self, c):
        with pytest.raises(ParameterError):
            sample_eh(3, 4, c, 1.0, 0)

    def test_eh_bad_d(self):
        with pytest.raises(ParameterError):
            sample_eh(3, 4, 0.0, 0.0, 0)

    def test_unknown_method(self):
        with pytest.raises(ParameterError):
            sample_family("xx", 3, 4, 0)


class TestHyperplanes:
    def test_origin_gives_zero_bits(self):
        f = sample_lh(5, 40, 0)
        assert not hash_lh(f, np.zeros(5)).to_bits().any()

    def test_examples(self):
        assert hash_lh(LinearHyperplaneFamily(np.array([[1.0, 0.0]])), [3.0, -7.0]).to_bits().tolist() == [True]
        f = AffineHyperplaneFamily(np.array([[1.0, 1.0]]), np.array([-1.0]))
        assert hash_ah(f, [0.4, 0.4]).to_bits().tolist() == [False]

    def test_positive_homogeneity(self, rng):
        f = sample_lh(6, 200, 1)
        x = rng.standard_normal((50, 6))
        base = f.bits(x)
        for alpha in (1e-3, 0.5, 7.0, 1e4):
            assert np.array_equal(f.bits(alpha * x), base)

    def test_dim_mismatch(self):
        with pytest.raises(DimensionError):
            hash_lh(sample_lh(3, 4, 0), [1.0, 2.0])

    def test_zero_row_rejected(self):
        with pytest.raises(ParameterError):
            LinearHyperplaneFamily(np.array([[1.0, 0.0], [0.0, 0.0]]))


class TestHyperspheres:
    fam = HypersphereFamily(np.zeros((1, 2)), np.array([1.0]))

    def test_inside_outside_boundary(self):
        assert hash_hs(self.fam, [0.5, 0.0]).to_bits().tolist() == [True]
        assert hash_hs(self.fam, [2.0, 0.0]).to_bits().tolist() == [False]
        assert hash_hs(self.fam, [1.0, 0.0]).to_bits().tolist() == [False]

    def test_compares_squared_distance_with_squared_radius(self):
        # radius 2: a point at distance 1.5 is inside, although 1.5^2 > 2
        f = HypersphereFamily(np.zeros((1, 1)), np.array([2.0]))
        assert hash_hs(f, [1.5]).to_bits().tolist() == [True]

    def test_nonpositive_radius_rejected(self):
        with pytest.raises(ParameterError):
            HypersphereFamily(np.zeros((1, 2)), np.array([0.0]))


class TestEclipse:
    def _fam(self, normal):
        return EclipseFamily(np.array([normal], float), np.zeros(2), 1.0)

    def test_hand_examples(self):
        f = self._fam([0.0, 1.0])
        assert hash_eh(f, [0.0]).to_bits().tolist() == [False]
        assert hash_eh(f, [2.0]).to_bits().tolist() == [True]

    def test_zero_dot_gives_zero(self):
        # x = 1 lifts to (1, 0); the normal (0, 1) is orthogonal to it
        f = self._fam([0.0, 1.0])
        assert inverse_stereographic([1.0], 1.0).tolist() == [1.0, 0.0]
        assert hash_eh(f, [1.0]).to_bits().tolist() == [False]

    def test_c_outside_sphere_rejected(self):
        with pytest.raises(ParameterError):
            EclipseFamily(np.ones((2, 3)), np.array([0.0, 0.0, 1.1]), 1.0)

    def test_matches_per_bit_formula(self, rng):
        f = sample_eh(4, 33, 0.3, 1.7, 8)
        x = rng.standard_normal((40, 4)) * 2
        bits = f.bits(x)
        for i, row in enumerate(x):
            lifted = inverse_stereographic(row, 1.7)
            for k in range(33):
                assert bits[i, k] == (np.dot(f.Wt[k], lifted - f.C) > 0)

    def test_hypersphere_correspondence(self, rng):
        violations = 0
        for trial in range(100):
            n = int(rng.integers(1, 6))
            u = rng.standard_normal(n + 1)
            C = u / np.linalg.norm(u) * rng.random() ** (1 / (n + 1))
            d = float(np.exp(rng.uniform(-1, 1)))
            f = EclipseFamily(rng.standard_normal((1, n + 1)), C, d)
            shape = f.row_shape(0)
            assert isinstance(shape, Hypersphere)
            flip = f.row_flip(0)
            scale = np.linalg.norm(shape.center) + shape.radius
            x = rng.standard_normal((1000, n)) * scale
            dist = np.linalg.norm(x - shape.center, axis=1)
            off = np.abs(dist - shape.radius) > 1e-9 * max(1.0, shape.radius)
            expected = np.logical_xor(flip, dist < shape.radius)
            violations += int(np.count_nonzero((f.bits(x)[:, 0] != expected) & off))
        assert violations == 0

    def test_plane_through_north_pole_is_hyperplane_hashing(self, rng):
        # C on the north pole: every cut passes through it
        n = 3
        C = np.zeros(n + 1)
        C[-1] = 1.0
        f = EclipseFamily(rng.standard_normal((20, n + 1)), C, 1.3)
        x = rng.standard_normal((500, n)) * 4
        bits = f.bits(x)
        for k in range(20):
            shape = f.row_shape(k)
            assert isinstance(shape, AffinePlane)
            assert np.array_equal(bits[:, k], shape.side(x) > 0)


class TestBatch:
    @pytest.mark.parametrize("method", ["lh", "ah", "hs", "eh"])
    def test_batch_equals_loop(self, method, rng):
        f = sample_family(method, 7, 70, 3, c=0.2, d=2.0)
        x = rng.standard_normal((100, 7)) * 2
        codes = batch_hash(f, x)
        assert isinstance(codes, PackedCodes) and len(codes) == 100
        for i in range(100):
            assert codes[i] == f.hash(x[i])

    def test_singleton_and_empty(self, rng):
        f = sample_lh(3, 10, 0)
        x = rng.standard_normal(3)
        assert batch_hash(f, [x])[0] == hash_lh(f, x)
        assert len(batch_hash(f, [])) == 0
        assert len(batch_hash(f, np.zeros((0, 3)))) == 0

    def test_batch_dim_mismatch(self):
        with pytest.raises(DimensionError):
            batch_hash(sample_lh(3, 10, 0), np.zeros((4, 2)))
