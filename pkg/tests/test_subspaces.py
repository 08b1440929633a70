import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmmssl.models import SharedGMM
from gmmssl.rng import substream
from gmmssl.subspaces import (ANGLE_TOL_ANALYTIC, Subspace, containment_report,
                              empirical_svd_subspace, fisher_directions,
                              fisher_discriminant, fisher_lda_direction,
                              fisher_subspace, lda_direction,
                              orthonormal_columns, principal_angles,
                              svd_subspace)
from oracles import gram_schmidt


def spherical(means, weights=None):
    means = np.atleast_2d(np.asarray(means, float))
    k, d = means.shape
    w = np.full(k, 1.0 / k) if weights is None else np.asarray(weights, float)
    return SharedGMM(w, means, np.eye(d))


def random_model(seed, d=8, k=3, centered=True):
    rng = substream(seed, "model")
    g = rng.standard_normal((d, d))
    cov = g @ g.T / d + 0.3 * np.eye(d)
    means = rng.standard_normal((k, d)) * 2.0
    if centered:
        means = means - means.mean(axis=0)
    return SharedGMM(np.full(k, 1.0 / k), means, 0.5 * (cov + cov.T))


def span_basis(vectors):
    return orthonormal_columns(np.asarray(vectors, float).T, rank_tol=1e-12)


class TestSubspaceType:
    def test_requires_orthonormal_columns(self):
        with pytest.raises(ValueError, match="orthonormal"):
            Subspace(np.array([[1.0, 1.0], [0.0, 1e-3]]))

    def test_dimension_bounds(self):
        with pytest.raises(ValueError, match="1 <= m <= d"):
            Subspace(np.zeros((2, 3)))

    def test_accepts_identity_block(self):
        s = Subspace(np.eye(4)[:, :2])
        assert s.dim == 2 and s.ambient_dim == 4


class TestFisherSubspace:
    def test_spherical_equals_mean_span(self):
        model = spherical([[1.0, 0.0, 0.5], [-1.0, 0.0, 0.5], [0.0, 0.0, -1.0]])
        sub = fisher_subspace(model)
        mean_span = Subspace(span_basis(model.means))
        assert np.max(principal_angles(sub, mean_span)) <= 1e-10

    def test_flat_covariance_keeps_separating_axis(self):
        model = SharedGMM([0.5, 0.5], [[1.0, 0.0], [-1.0, 0.0]],
                          np.diag([1.0, 100.0]))
        sub = fisher_subspace(model)
        assert sub.dim == 1
        assert abs(abs(sub.basis[0, 0]) - 1.0) <= 1e-12

    def test_zero_means_rejected(self):
        model = SharedGMM([0.5, 0.5], np.zeros((2, 3)), np.eye(3))
        with pytest.raises(ValueError, match="zero-dimensional"):
            fisher_subspace(model)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_centered_means_drop_one_dimension(self, seed):
        model = random_model(seed)
        sub = fisher_subspace(model)
        assert sub.dim == 2
        # Sigma * basis must lie back in the span of the means; compare
        # against a Gram-Schmidt orthonormalization as the oracle
        mean_basis = gram_schmidt(model.means)
        back = model.covariance @ sub.basis
        residual = back - mean_basis @ (mean_basis.T @ back)
        assert np.max(np.abs(residual)) <= 1e-8

    def test_directions_ordered_by_discriminant(self):
        model = random_model(5, d=6, k=4)
        vals, dirs = fisher_directions(model)
        assert np.all(np.diff(vals) <= 1e-12)
        total = fisher_discriminant(model, dirs)
        assert total == pytest.approx(vals.sum(), rel=1e-9)


class TestSvdSubspace:
    def test_spherical_centered_matches_mean_subspace(self):
        model = spherical([[2.0, 0.0, 0.0], [-1.0, 1.0, 0.0], [-1.0, -1.0, 0.0]])
        sub = svd_subspace(model, 2)
        mean_span = Subspace(span_basis(model.means))
        assert np.max(principal_angles(sub, mean_span)) <= 1e-10

    def test_flat_direction_wins(self):
        model = SharedGMM([0.5, 0.5], [[1.0, 0.0], [-1.0, 0.0]],
                          np.diag([1.0, 25.0]))
        sub = svd_subspace(model, 1)
        assert abs(abs(sub.basis[1, 0]) - 1.0) <= 1e-12
        fisher = fisher_subspace(model)
        assert np.max(principal_angles(sub, fisher)) == pytest.approx(np.pi / 2)

    def test_diagonal_ordering(self):
        model = SharedGMM([1.0], [[0.0, 0.0, 0.0]], np.diag([3.0, 2.0, 1.0]))
        sub = svd_subspace(model, 2)
        expected = np.eye(3)[:, :2]
        assert np.max(np.abs(np.abs(sub.basis) - expected)) <= 1e-12

    def test_degenerate_spectrum_warns(self):
        model = SharedGMM([1.0], [[0.0, 0.0]], np.eye(2))
        with pytest.warns(UserWarning, match="non-unique"):
            svd_subspace(model, 1)

    def test_empirical_variant_agrees_at_large_n(self):
        model = spherical([[3.0, 0.0], [-3.0, 0.0]])
        from gmmssl.models import sample_gmm
        pts = sample_gmm(model, 50_000, substream(17)).points
        pop = svd_subspace(model, 1)
        emp = empirical_svd_subspace(pts, 1)
        assert np.max(principal_angles(pop, emp)) <= 0.05

    def test_rank_bounds(self):
        model = spherical([[1.0, 0.0]])
        with pytest.raises(ValueError, match="rank"):
            svd_subspace(model, 3)


class TestFisherDiscriminant:
    def test_zero_means_score_zero(self):
        model = SharedGMM([0.5, 0.5], np.zeros((2, 2)), np.eye(2))
        assert fisher_discriminant(model, np.eye(2)[:, :1]) == 0.0

    def test_unit_separation_axis(self):
        model = spherical([[1.0, 0.0], [-1.0, 0.0]])
        assert fisher_discriminant(model, np.array([[1.0], [0.0]])) == pytest.approx(1.0)
        assert fisher_discriminant(model, np.array([[0.0], [1.0]])) == pytest.approx(0.0)

    def test_invariant_under_right_multiplication(self):
        model = random_model(3)
        rng = substream(18)
        a = rng.standard_normal((8, 3))
        j = fisher_discriminant(model, a)
        for _ in range(10):
            r = rng.standard_normal((3, 3)) + 3.0 * np.eye(3)
            assert abs(fisher_discriminant(model, a @ r) - j) <= 1e-8 * (1.0 + abs(j))

    def test_monotone_in_column_space(self):
        model = random_model(4)
        rng = substream(19)
        a1 = rng.standard_normal((8, 2))
        a2 = np.hstack([a1, rng.standard_normal((8, 2))])
        assert fisher_discriminant(model, a1) <= fisher_discriminant(model, a2) + 1e-10

    def test_reference_span_is_maximal(self):
        model = random_model(6)
        basis = fisher_subspace(model).basis
        best = fisher_discriminant(model, basis)
        rng = substream(20)
        for _ in range(100):
            a = rng.standard_normal((8, basis.shape[1]))
            assert fisher_discriminant(model, a) <= best + 1e-9

    def test_degenerate_projection_rejected(self):
        model = spherical([[1.0, 0.0]])
        with pytest.raises(ValueError, match="degenerate"):
            fisher_discriminant(model, np.zeros((2, 1)))


class TestPrincipalAngles:
    def test_identical_spans(self):
        s = Subspace(np.eye(4)[:, :2])
        assert np.allclose(principal_angles(s, s), 0.0)

    def test_orthogonal_lines(self):
        s1 = Subspace(np.eye(2)[:, :1])
        s2 = Subspace(np.eye(2)[:, 1:])
        assert principal_angles(s1, s2)[0] == pytest.approx(np.pi / 2)

    def test_diagonal_line(self):
        # cos(theta) = <e1, (e1+e2)/sqrt(2)> = 1/sqrt(2)
        s1 = Subspace(np.eye(2)[:, :1])
        s2 = Subspace(np.array([[1.0], [1.0]]) / math.sqrt(2.0))
        assert principal_angles(s1, s2)[0] == pytest.approx(np.pi / 4)

    def test_ambient_mismatch(self):
        with pytest.raises(ValueError, match="ambient"):
            principal_angles(Subspace(np.eye(2)[:, :1]), Subspace(np.eye(3)[:, :1]))

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_angles_bounded_and_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        d = rng.integers(2, 7)
        m1 = rng.integers(1, d + 1)
        m2 = rng.integers(1, d + 1)
        s1 = Subspace(np.linalg.qr(rng.standard_normal((d, m1)))[0])
        s2 = Subspace(np.linalg.qr(rng.standard_normal((d, m2)))[0])
        angles = principal_angles(s1, s2)
        assert angles.shape == (min(m1, m2),)
        assert np.all(angles >= -1e-12) and np.all(angles <= np.pi / 2 + 1e-12)
        assert np.all(np.diff(angles) >= -1e-12)
        # arccos near 1 amplifies roundoff, so symmetry holds to ~sqrt(eps)
        assert np.allclose(angles, principal_angles(s2, s1), atol=1e-6)


class TestContainmentReport:
    @pytest.fixture
    def reference(self):
        return Subspace(np.eye(5)[:, :3])

    def test_reference_reproduces_itself(self, reference):
        report = containment_report(reference.basis, reference)
        assert report.contained and report.equal and report.dim == 3
        assert report.max_angle <= 1e-12

    def test_extra_column_breaks_containment(self, reference):
        learned = np.hstack([reference.basis, np.eye(5)[:, 4:]])
        report = containment_report(learned, reference)
        assert not report.contained and not report.equal
        assert report.dim == 4

    def test_right_multiplication_keeps_equality(self, reference):
        rng = substream(21)
        mix = rng.standard_normal((3, 3)) + 2.0 * np.eye(3)
        report = containment_report(reference.basis @ mix, reference,
                                    angle_tol=ANGLE_TOL_ANALYTIC)
        assert report.equal

    def test_zero_map_flags_collapse(self, reference):
        report = containment_report(np.zeros((5, 2)), reference)
        assert report.collapse and report.contained and not report.equal
        assert report.dim == 0

    def test_strict_subspace_contained_not_equal(self, reference):
        report = containment_report(reference.basis[:, :2], reference)
        assert report.contained and not report.equal

    def test_equal_implies_contained_on_random_maps(self):
        rng = substream(22)
        for _ in range(50):
            d = int(rng.integers(2, 6))
            ref = Subspace(np.linalg.qr(rng.standard_normal((d, int(rng.integers(1, d + 1)))))[0])
            learned = rng.standard_normal((d, int(rng.integers(1, d + 1))))
            report = containment_report(learned, ref)
            assert report.contained or not report.equal


class TestLdaDirections:
    def test_identity_covariance(self):
        direction = lda_direction([2.0, 1.0], [0.0, 0.0], np.eye(2))
        assert np.allclose(direction, [2.0, 1.0])

    def test_diagonal_solve(self):
        direction = lda_direction([1.0, 1.0], [0.0, 0.0], np.diag([1.0, 4.0]))
        assert np.allclose(direction, [1.0, 0.25])

    def test_coincident_means_rejected(self):
        with pytest.raises(ValueError, match="zero discriminant"):
            lda_direction([1.0, 1.0], [1.0, 1.0], np.eye(2))

    def test_two_component_span_matches_reference_subspace(self):
        rng = substream(23)
        g = rng.standard_normal((4, 4))
        cov = g @ g.T / 4 + 0.5 * np.eye(4)
        mu = rng.standard_normal(4)
        model = SharedGMM([0.5, 0.5], [mu, -mu], 0.5 * (cov + cov.T))
        direction = lda_direction(mu, -mu, model.covariance)
        sub = fisher_subspace(model)
        line = Subspace((direction / np.linalg.norm(direction))[:, None])
        assert np.max(principal_angles(line, sub)) <= 1e-10

    def test_weighted_pooling(self):
        direction = fisher_lda_direction([1.0, 1.0], [0.0, 0.0],
                                         np.diag([2.0, 1.0]), np.diag([1.0, 2.0]),
                                         0.5, 0.5)
        assert np.allclose(direction, [1.0 / 1.5, 1.0 / 1.5])

    def test_identity_covariances(self):
        direction = fisher_lda_direction([3.0, 0.0], [1.0, 0.0],
                                         np.eye(2), np.eye(2), 0.3, 0.7)
        assert np.allclose(direction, [2.0, 0.0])

    def test_shared_covariance_collinear_with_plain_direction(self):
        rng = substream(24)
        g = rng.standard_normal((3, 3))
        cov = g @ g.T / 3 + 0.4 * np.eye(3)
        cov = 0.5 * (cov + cov.T)
        mu1, mu2 = rng.standard_normal(3), rng.standard_normal(3)
        weighted = fisher_lda_direction(mu1, mu2, cov, cov, 0.2, 0.8)
        plain = lda_direction(mu1, mu2, cov)
        cosine = weighted @ plain / (np.linalg.norm(weighted) * np.linalg.norm(plain))
        assert abs(cosine) == pytest.approx(1.0, abs=1e-12)

    def test_unweighted_variant_flag(self):
        unweighted = fisher_lda_direction([1.0, 0.0], [0.0, 0.0],
                                          np.diag([2.0, 1.0]), np.diag([4.0, 1.0]),
                                          0.5, 0.5, weighted=False)
        assert np.allclose(unweighted, [1.0 / 6.0, 0.0])

    def test_bad_weights(self):
        with pytest.raises(ValueError, match="sum to 1"):
            fisher_lda_direction([1.0], [0.0], [[1.0]], [[1.0]], 0.5, 0.6)


class TestSphericalCoincidence:
    def test_three_reference_constructions_agree(self):
        model = spherical([[2.0, 0.0, 1.0], [-2.0, 1.0, 1.0], [0.0, -1.0, -2.0]])
        centered = SharedGMM(model.weights, model.means - model.mixture_mean(),
                             model.covariance)
        fisher = fisher_subspace(centered)
        spectral = svd_subspace(centered, fisher.dim)
        mean_span = Subspace(span_basis(centered.means))
        assert np.max(principal_angles(fisher, spectral)) <= 1e-8
        assert np.max(principal_angles(fisher, mean_span)) <= 1e-8


class TestPancakeSeparation:
    def test_spectral_pick_is_worst_in_random_trials(self):
        model = SharedGMM([0.5, 0.5], [[2.5, 0.0, 0.0], [-2.5, 0.0, 0.0]],
                          np.diag([1.0, 50.0, 50.0]))
        with pytest.warns(UserWarning, match="non-unique"):
            spectral = svd_subspace(model, 1)
        j_spectral = fisher_discriminant(model, spectral.basis)
        rng = substream(25)
        wins = sum(fisher_discriminant(model, rng.standard_normal((3, 1))) > j_spectral
                   for _ in range(100))
        assert wins >= 99
