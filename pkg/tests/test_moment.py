"""Moment map, level sets, induced map, degree methods, gradient fibers."""

import numpy as np
import pytest

from pshlab.expr import PotentialField, sample_ball
from pshlab.moment import (
    MomentMapField, QuotientPoint, chordal_distance, compute_degree,
    degree_certificate_for_level, gradient_fiber, homotopy_positivity,
    induced_map, moment_map, sample_level_set, verify_hamiltonian,
)
from pshlab.symmetry import PreconditionError

ROUND2 = "z1*cj(z1) + z2*cj(z2)"
QUARTIC2 = "z1*cj(z1) + z2*cj(z2) + 0.1*z1*cj(z1)*z2*cj(z2)"


@pytest.fixture(scope="module")
def m_round():
    return MomentMapField(PotentialField.from_text(ROUND2, 2))


@pytest.fixture(scope="module")
def m_quartic():
    return MomentMapField(PotentialField.from_text(QUARTIC2, 2))


class TestQuotientPoint:
    def test_normalization(self):
        q = QuotientPoint.of(2.0, 1.0)
        assert q.chart == 0
        assert q.alpha == 1.0
        assert q.beta == pytest.approx(0.5)

    def test_normalization_idempotent(self):
        q = QuotientPoint.of(3j, -1)
        q2 = QuotientPoint.of(q.alpha, q.beta)
        assert chordal_distance(q, q2) < 1e-15

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            QuotientPoint.of(0, 0)

    def test_phase_cancels(self):
        q1 = QuotientPoint.of(1 + 1j, 2 - 1j)
        phase = np.exp(0.7j)
        q2 = QuotientPoint.of(phase * (1 + 1j), phase * (2 - 1j))
        assert chordal_distance(q1, q2) < 1e-15

    def test_sphere_roundtrip(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
            q = QuotientPoint.of(a, b)
            q2 = QuotientPoint.from_sphere(q.sphere())
            assert chordal_distance(q, q2) < 1e-12


class TestMomentMap:
    def test_round_value(self, m_round):
        assert moment_map(m_round, (1, 1j)) == pytest.approx(2.0)

    def test_origin(self, m_round, m_quartic):
        assert moment_map(m_round, (0, 0)) == 0.0
        assert moment_map(m_quartic, (0, 0)) == 0.0

    def test_quartic_value(self, m_quartic):
        assert moment_map(m_quartic, (1, 1)) == pytest.approx(2.2)

    def test_invariance(self, m_quartic):
        rng = np.random.default_rng(12)
        pts = sample_ball(2, 2.0, 100, rng)
        ts = rng.uniform(0, 2 * np.pi, 100)
        base = m_quartic.mu_values(pts)
        moved = m_quartic.mu_values(pts * np.exp(1j * ts)[:, None])
        assert np.max(np.abs(moved - base)) < 1e-12

    def test_non_invariant_rejected(self):
        f = PotentialField.from_text(
            ROUND2 + " + 0.2*(0.5*z1 + 0.5*cj(z1))", 2)
        with pytest.raises(PreconditionError, match="circle-invariant"):
            MomentMapField(f)

    def test_non_psh_rejected(self):
        # invariant under the diagonal circle but with identically singular Levi
        f = PotentialField.from_text("z1*cj(z1)*z2*cj(z2)", 2)
        with pytest.raises(PreconditionError, match="plurisubharmonic"):
            MomentMapField(f)


class TestHamiltonianOracle:
    def test_round_closed_form(self, m_round):
        rng = np.random.default_rng(4)
        samples = sample_ball(2, 2.0, 30, rng)
        assert verify_hamiltonian(m_round, samples) < 1e-8

    def test_quartic_hundred_samples(self, m_quartic):
        rng = np.random.default_rng(5)
        samples = sample_ball(2, 2.0, 100, rng)
        assert verify_hamiltonian(m_quartic, samples) < 1e-6


class TestLevelSet:
    def test_round_unit_sphere(self, m_round):
        sample = sample_level_set(m_round, 1.0, 50, seed=2)
        norms = np.linalg.norm(sample.points, axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-10
        assert sample.skipped == 0
        assert not sample.multi_root_flags.any()

    def test_quartic_axis_direction(self, m_quartic):
        # the quartic cross term vanishes on the axes, so mu(r, 0) = r^2
        from pshlab.moment import _lift_rays
        r, ok, _ = _lift_rays(m_quartic, 1.0, np.array([[1, 0]], dtype=complex), 2.5)
        assert ok[0]
        assert r[0] == pytest.approx(1.0, abs=1e-10)

    def test_level_below_origin_value(self, m_round):
        with pytest.raises(PreconditionError, match="not above"):
            sample_level_set(m_round, -1.0, 10, seed=1)

    def test_points_on_level(self, m_quartic):
        sample = sample_level_set(m_quartic, 1.5, 80, seed=7)
        assert len(sample.points) == 80
        assert np.max(np.abs(m_quartic.mu_values(sample.points) - 1.5)) < 1e-10


class TestInducedMap:
    def test_identity_for_round(self, m_round):
        p = np.array([0.6, 0.8j])
        q = induced_map(m_round, p)
        assert chordal_distance(q, QuotientPoint.of(*p)) < 1e-12

    def test_quartic_at_ones(self, m_quartic):
        q = induced_map(m_quartic, (1, 1))
        assert chordal_distance(q, QuotientPoint.of(1, 1)) < 1e-12

    def test_phase_equivariance(self, m_quartic):
        sample = sample_level_set(m_quartic, 1.0, 20, seed=3)
        rng = np.random.default_rng(8)
        for p in sample.points:
            t = rng.uniform(0, 2 * np.pi)
            q1 = induced_map(m_quartic, p)
            q2 = induced_map(m_quartic, np.exp(1j * t) * p)
            assert chordal_distance(q1, q2) < 1e-10


class TestHomotopyPositivity:
    def test_round_minimum_is_level(self, m_round):
        # (1-s) <grad phi, a> + s |a|^2 = (1-s) 2b + s b on mu = b, so the
        # minimum over s in [0, 1] is b, attained at s = 1
        for b in (0.5, 1.0, 2.0):
            cert = homotopy_positivity(m_round, b, 100, 11, seed=1)
            assert cert.passed
            assert cert.min_value == pytest.approx(b, abs=1e-9)
            assert cert.witness_s == pytest.approx(1.0)

    def test_quartic_positive(self, m_quartic):
        cert = homotopy_positivity(m_quartic, 1.0, 200, 11, seed=2)
        assert cert.passed
        assert cert.min_value > 0

    def test_s_one_slice_is_norm(self, m_quartic):
        cert = homotopy_positivity(m_quartic, 1.0, 100, 2, seed=3)
        # s grid {0, 1}: the s = 1 slice is min |a|^2 > 0 always
        assert cert.min_value > 0


IDENTITY = lambda pairs: np.asarray(pairs, dtype=complex)


def squares(pairs):
    pairs = np.asarray(pairs, dtype=complex)
    return np.stack([pairs[:, 0] ** 2, pairs[:, 1] ** 2], axis=1)


def conjugation(pairs):
    return np.conj(np.asarray(pairs, dtype=complex))


class TestComputeDegree:
    def test_identity(self):
        cert = compute_degree(IDENTITY, seed=1)
        assert cert.degree == 1
        assert cert.cross_check_degree == 1
        assert cert.passed
        assert all(c == 1 for c in cert.per_target_counts)

    def test_squares(self):
        cert = compute_degree(squares, seed=2)
        assert cert.degree == 2
        assert cert.cross_check_degree == 2
        assert cert.passed

    def test_conjugation(self):
        cert = compute_degree(conjugation, seed=3)
        assert cert.degree == -1
        assert cert.cross_check_degree == -1
        assert cert.passed

    def test_cubes(self):
        def cubes(pairs):
            pairs = np.asarray(pairs, dtype=complex)
            return np.stack([pairs[:, 0] ** 3, pairs[:, 1] ** 3], axis=1)
        cert = compute_degree(cubes, seed=5)
        assert cert.degree == 3
        assert cert.cross_check_degree == 3
        assert cert.passed

    def test_conjugate_squares(self):
        def conj_squares(pairs):
            pairs = np.conj(np.asarray(pairs, dtype=complex))
            return np.stack([pairs[:, 0] ** 2, pairs[:, 1] ** 2], axis=1)
        cert = compute_degree(conj_squares, seed=6)
        assert cert.degree == -2
        assert cert.passed

    def test_area_method_primary(self):
        cert = compute_degree(squares, seed=4, method="area")
        assert cert.method == "area"
        assert cert.degree == 2
        assert abs(cert.area_integral - 2.0) < 0.02

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            compute_degree(IDENTITY, seed=1, method="winding")


class TestDegreePipeline:
    def test_round_level_one(self, m_round):
        cert = degree_certificate_for_level(m_round, 1.0, seed=1)
        assert cert.degree == 1
        assert cert.cross_check_degree == 1
        assert cert.homotopy_passed
        assert cert.passed

    def test_quartic_level_one(self, m_quartic):
        cert = degree_certificate_for_level(m_quartic, 1.0, seed=2)
        assert cert.degree == 1
        assert cert.passed

    def test_cross_term_field(self):
        # constant Hermitian off-diagonal term: still circle-invariant and
        # strictly PSH, the induced map genuinely mixes the coordinates
        f = PotentialField.from_text(
            "z1*cj(z1) + z2*cj(z2) + 0.25*z1*cj(z2) + 0.25*cj(z1)*z2", 2)
        m = MomentMapField(f, seed=2)
        cert = degree_certificate_for_level(m, 1.0, seed=11)
        assert cert.degree == 1
        assert cert.cross_check_degree == 1
        assert cert.passed


class TestGradientFiber:
    def test_round_linear_target(self):
        f = PotentialField.from_text(ROUND2, 2)
        report = gradient_fiber(f, (2, 2j), starts=24, seed=1)
        assert len(report.clusters) == 1
        cl = report.clusters[0]
        assert np.linalg.norm(cl.center - np.array([1, 1j])) < 1e-8
        assert cl.residual < 1e-8
        assert cl.isolated
        assert report.phase_hypothesis_ok

    def test_round_zero_target(self):
        f = PotentialField.from_text(ROUND2, 2)
        report = gradient_fiber(f, (0, 0), starts=24, seed=2)
        assert len(report.clusters) == 1
        assert np.linalg.norm(report.clusters[0].center) < 1e-9

    def test_quartic_contains_constructed_solution(self):
        f = PotentialField.from_text(QUARTIC2, 2)
        report = gradient_fiber(f, (2.2, 2.2), starts=48, seed=3)
        hits = [cl for cl in report.clusters
                if np.linalg.norm(cl.center - np.array([1.0, 1.0])) < 1e-7]
        assert len(hits) == 1
        assert all(cl.isolated for cl in report.clusters)
        assert all(cl.residual < 1e-8 for cl in report.clusters)

    def test_harmonic_rejected(self):
        f = PotentialField.from_text("0.5*z1^2 + 0.5*cj(z1)^2 + z2*cj(z2)", 2)
        with pytest.raises(PreconditionError):
            gradient_fiber(f, (0, 0), starts=8, seed=1)

    def test_wrong_dimension(self):
        f = PotentialField.from_text("z1*cj(z1)", 1)
        with pytest.raises(ValueError, match="C\\^2"):
            gradient_fiber(f, (0, 0), starts=8, seed=1)
