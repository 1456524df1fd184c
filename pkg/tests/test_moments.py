import numpy as np
import pytest

from bestat import (
    DomainError,
    MomentPair,
    ShapeError,
    identity_a_residual,
    identity_b_values,
    identity_c_check,
    identity_d_gap,
    moments_from_probs,
    subsample_covariance,
    walsh_value,
)
from bestat.errors import SingularityError
from bestat.moments import validate_probs


def random_probs(rng, n):
    p = rng.uniform(0.05, 1.0, n)
    return p / p.sum()


def dense_w(n):
    masks = np.arange(n)
    return walsh_value(masks[:, None], masks[None, :]).astype(float)


class TestMoments:
    def test_matches_dense_matrix_route(self):
        rng = np.random.default_rng(0)
        for n in (2, 8, 16):
            p = random_probs(rng, n)
            w = dense_w(n)
            mp = moments_from_probs(p)
            assert np.allclose(mp.mu, w @ p, atol=1e-12)
            assert np.allclose(mp.sigma, w @ np.diag(p) @ w.T, atol=1e-12)

    def test_constant_mask_normalisation(self):
        rng = np.random.default_rng(1)
        mp = moments_from_probs(random_probs(rng, 32))
        assert mp.mu[0] == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(np.diag(mp.sigma), 1.0, atol=1e-12)

    def test_uniform_probs_give_identity_sigma(self):
        mp = moments_from_probs(np.full(16, 1 / 16))
        assert np.allclose(mp.sigma, np.eye(16), atol=1e-12)
        assert np.allclose(mp.mu[1:], 0.0, atol=1e-12)

    def test_validate_probs_errors(self):
        with pytest.raises(ShapeError):
            validate_probs([0.5, 0.25, 0.25])
        with pytest.raises(DomainError):
            validate_probs([1.2, -0.2])
        with pytest.raises(DomainError):
            validate_probs([0.5, 0.6])


class TestIdentities:
    def test_identity_a_zero_for_positive_probs(self):
        rng = np.random.default_rng(2)
        for n in (4, 16, 64):
            mp = moments_from_probs(random_probs(rng, n))
            assert identity_a_residual(mp) < 1e-10

    def test_identity_b_frozen_example(self):
        probs = [0.3, 0.7]
        mp = moments_from_probs(probs)
        harmonic, hotelling, inverse = identity_b_values(mp, probs)
        assert harmonic == pytest.approx(25 / 21, abs=1e-12)
        assert hotelling == pytest.approx(harmonic, abs=1e-10)
        assert inverse == pytest.approx(harmonic, abs=1e-10)

    def test_identity_b_random_agreement(self):
        rng = np.random.default_rng(3)
        for n in (4, 8, 32):
            probs = random_probs(rng, n)
            h, hot, inv = identity_b_values(moments_from_probs(probs), probs)
            assert hot == pytest.approx(h, abs=1e-8)
            assert inv == pytest.approx(h, abs=1e-8)

    def test_identity_b_rejects_zero_cells(self):
        probs = np.array([0.0, 0.5, 0.25, 0.25])
        with pytest.raises(SingularityError):
            identity_b_values(moments_from_probs(probs), probs)

    def test_identity_c_near_uniform_true(self):
        rng = np.random.default_rng(4)
        n = 16
        for _ in range(25):
            probs = np.full(n, 1 / n) + rng.uniform(-1, 1, n) * 1e-4
            probs = np.clip(probs, 1e-9, None)
            probs /= probs.sum()
            assert identity_c_check(moments_from_probs(probs)) is True

    def test_identity_c_not_applicable_far_from_uniform(self):
        probs = np.array([0.85, 0.05, 0.05, 0.05])
        assert identity_c_check(moments_from_probs(probs)) is None

    def test_identity_d_frozen_example_and_uniform(self):
        mp = moments_from_probs([0.3, 0.7])
        assert identity_d_gap(mp) == pytest.approx(4 / 21, abs=1e-10)
        assert identity_d_gap(moments_from_probs(np.full(8, 1 / 8))) is None

    def test_identity_d_linear_decay(self):
        rng = np.random.default_rng(5)
        n = 4
        v = rng.uniform(-1, 1, n)
        v -= v.mean()
        gaps = []
        for eps in (1e-2, 1e-3, 1e-4):
            probs = np.full(n, 1 / n) + eps * v
            gaps.append(identity_d_gap(moments_from_probs(probs)))
        assert gaps[0] / gaps[1] >= 9.0
        assert gaps[1] / gaps[2] >= 9.0


class TestSubsampleCovariance:
    def test_full_subsample_is_zero(self):
        counts = np.array([3, 5, 4, 4])
        assert np.array_equal(subsample_covariance(counts, 16), np.zeros((3, 3)))

    def test_two_cell_uniform_value(self):
        cov = subsample_covariance([4, 4], 4)
        assert cov.shape == (1, 1)
        assert cov[0, 0] == pytest.approx(1 / 7, abs=1e-14)

    def test_symmetry_and_scale(self):
        rng = np.random.default_rng(6)
        counts = rng.integers(1, 9, 16)
        cov = subsample_covariance(counts, 8)
        assert np.allclose(cov, cov.T, atol=1e-12)
        n = int(counts.sum())
        cov2 = subsample_covariance(counts, 4)
        ratio = ((n - 4) / (4 * (n - 1))) / ((n - 8) / (8 * (n - 1)))
        assert np.allclose(cov2, ratio * cov, atol=1e-12)

    def test_validation(self):
        with pytest.raises(DomainError):
            subsample_covariance([2, 2], 5)
        with pytest.raises(ShapeError):
            subsample_covariance([1, 2, 3], 2)
