"""Gradients, Levi forms, real Hessians, PSH certificates, radial profiles."""

import numpy as np
import pytest

from pshlab.expr import (
    Const, EvalDomainError, PotentialField, parse_expression, sample_ball,
)
from pshlab.geometry import (
    BallSampler, check_strict_psh, complex_gradient, jmul, levi_form,
    levi_hessian_identity_residual, radial_profile, real_hessian, real_inner,
    realify, unrealify,
)

ROUND2 = "z1*cj(z1) + z2*cj(z2)"
QUARTIC2 = "z1*cj(z1) + z2*cj(z2) + 0.1*z1*cj(z1)*z2*cj(z2)"
HARMONIC = "0.5*z1^2 + 0.5*cj(z1)^2"  # Re(z^2), pluriharmonic


@pytest.fixture(scope="module")
def round2():
    return PotentialField.from_text(ROUND2, 2)


@pytest.fixture(scope="module")
def quartic2():
    return PotentialField.from_text(QUARTIC2, 2)


@pytest.fixture(scope="module")
def harmonic():
    return PotentialField.from_text(HARMONIC, 1)


def fd_real_gradient(f, p, h=1e-5):
    x = realify(p)
    out = np.empty(x.size)
    for m in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[m] += h
        xm[m] -= h
        out[m] = (f.value(unrealify(xp)) - f.value(unrealify(xm))) / (2 * h)
    return out


def fd_real_hessian(f, p, h=1e-4):
    x = realify(p)
    n = x.size
    out = np.empty((n, n))
    for a in range(n):
        for b in range(n):
            xs = [x.copy() for _ in range(4)]
            xs[0][a] += h; xs[0][b] += h
            xs[1][a] += h; xs[1][b] -= h
            xs[2][a] -= h; xs[2][b] += h
            xs[3][a] -= h; xs[3][b] -= h
            vals = [f.value(unrealify(xi)) for xi in xs]
            out[a, b] = (vals[0] - vals[1] - vals[2] + vals[3]) / (4 * h * h)
    return out


class TestConventions:
    def test_realify_roundtrip(self):
        v = np.array([1 + 2j, -3j])
        assert np.array_equal(unrealify(realify(v)), v)

    def test_j_compatibility(self):
        # <Jv, v> = 0 and <Jv, Jw> = <v, w> for 100 seeded pairs
        rng = np.random.default_rng(42)
        for _ in range(100):
            v = rng.normal(size=3) + 1j * rng.normal(size=3)
            w = rng.normal(size=3) + 1j * rng.normal(size=3)
            assert abs(real_inner(jmul(v), v)) < 1e-12 * np.linalg.norm(v) ** 2
            assert real_inner(jmul(v), jmul(w)) == pytest.approx(
                real_inner(v, w), abs=1e-12)


class TestComplexGradient:
    def test_round_field(self, round2):
        g = complex_gradient(round2, (1, 1j))
        assert np.allclose(g.complex_gradient, [2, 2j])

    def test_quartic_field(self, quartic2):
        g = complex_gradient(quartic2, (1, 1))
        assert np.allclose(g.complex_gradient, [2.2, 2.2])

    def test_symbolically_zero(self):
        f = PotentialField(2, Const(5.0))
        g = complex_gradient(f, (0.3, 0.7))
        assert np.all(g.components == 0)

    def test_real_gradient_matches_fd(self, quartic2):
        pts = sample_ball(2, 1.5, 100, np.random.default_rng(17))
        for p in pts:
            exact = complex_gradient(quartic2, p).real_gradient
            approx = fd_real_gradient(quartic2, p)
            scale = max(1.0, np.linalg.norm(exact))
            assert np.linalg.norm(exact - approx) <= 1e-6 * scale


class TestLeviForm:
    def test_identity_for_round(self, round2):
        levi = levi_form(round2, (0.3 - 1j, 0.5))
        assert np.allclose(levi.matrix, np.eye(2))
        assert np.allclose(levi.eigenvalues, [1, 1])

    def test_quartic_at_ones(self, quartic2):
        levi = levi_form(quartic2, (1, 1))
        assert np.allclose(levi.matrix, [[1.1, 0.1], [0.1, 1.1]])
        assert np.allclose(levi.eigenvalues, [1.0, 1.2])

    def test_harmonic_is_degenerate(self, harmonic):
        levi = levi_form(harmonic, (0.7,))
        assert levi.matrix.shape == (1, 1)
        assert levi.min_eigenvalue == pytest.approx(0, abs=1e-14)

    def test_hermiticity_residual(self, quartic2):
        pts = sample_ball(2, 2.0, 50, np.random.default_rng(3))
        for p in pts:
            levi = levi_form(quartic2, p)
            assert levi.asymmetry < 1e-10
            assert np.max(np.abs(levi.matrix - levi.matrix.conj().T)) < 1e-10


class TestRealHessian:
    def test_round_well(self):
        f = PotentialField.from_text("z1*cj(z1)", 1)
        hess = real_hessian(f, (0.2 + 0.1j,))
        assert np.allclose(hess.matrix, 2 * np.eye(2))

    def test_saddle(self, harmonic):
        hess = real_hessian(harmonic, (0.4 - 0.2j,))
        assert np.allclose(hess.matrix, np.diag([2.0, -2.0]))

    def test_quartic_against_fd(self, quartic2):
        p = np.array([1.0, 1.0], dtype=complex)
        exact = real_hessian(quartic2, p).matrix
        approx = fd_real_hessian(quartic2, p)
        assert np.max(np.abs(exact - approx)) <= 1e-5


class TestStrictPSH:
    def test_round_passes(self, round2):
        cert = check_strict_psh(round2, BallSampler(2, 1.0, 200, seed=1), epsilon=0.5)
        assert cert.passed
        assert cert.min_levi_eigenvalue == pytest.approx(1.0, abs=1e-12)

    def test_quartic_min_is_one(self, quartic2):
        # min eigenvalue of [[1+0.1|w|^2, 0.1 z̄ w], [0.1 z w̄, 1+0.1|z|^2]]
        # is identically 1: the discriminant collapses to (|z|^2+|w|^2)/2
        cert = check_strict_psh(quartic2, BallSampler(2, 1.0, 200, seed=1), epsilon=0.5)
        assert cert.passed
        assert cert.min_levi_eigenvalue == pytest.approx(1.0, abs=1e-9)

    def test_harmonic_fails_with_witness(self, harmonic):
        cert = check_strict_psh(harmonic, BallSampler(1, 1.0, 100, seed=1), epsilon=0.1)
        assert not cert.passed
        assert cert.witness is not None
        assert cert.min_levi_eigenvalue == pytest.approx(0, abs=1e-12)

    def test_sampler_minimum_count(self, round2):
        with pytest.raises(ValueError, match="100"):
            check_strict_psh(round2, BallSampler(2, 1.0, 50, seed=1), epsilon=0.5)


class TestLeviHessianIdentity:
    def test_round_unit_vector(self):
        f = PotentialField.from_text("z1*cj(z1)", 1)
        assert levi_hessian_identity_residual(f, (0.5,), (1,)) < 1e-14

    def test_harmonic_cancellation(self, harmonic):
        for v in [(1,), (1j,), (0.3 - 0.4j,)]:
            assert levi_hessian_identity_residual(harmonic, (0.2,), v) < 1e-12

    def test_random_polynomial_field(self):
        f = PotentialField.from_text(
            "z1*cj(z1) + 0.3*z1^2*cj(z1)^2 + 0.2*z1*cj(z2) + 0.2*cj(z1)*z2"
            " + z2*cj(z2)", 2)
        rng = np.random.default_rng(8)
        pts = sample_ball(2, 1.5, 20, rng)
        for p in pts:
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            assert levi_hessian_identity_residual(f, p, v) < 1e-9

    def test_complex_off_diagonal_levi(self, quartic2):
        # the |z|^2 |w|^2 term makes the Levi off-diagonal genuinely complex;
        # the pairing L(v) = sum H_jk v_j conj(v_k) is the one that satisfies
        # the quarter identity (the conjugate pairing evaluates L(conj v))
        p = np.array([1.0, 1.0j])
        v = np.array([1.0, 1.0j])
        assert levi_hessian_identity_residual(quartic2, p, v) < 1e-12
        levi = levi_form(quartic2, p)
        wrong = float(np.real(v.conjugate() @ levi.matrix @ v))
        right = float(np.real(v @ levi.matrix @ v.conjugate()))
        assert abs(wrong - right) > 0.1

    def test_zero_vector_rejected(self, round2):
        with pytest.raises(ValueError):
            levi_hessian_identity_residual(round2, (1, 1), (0, 0))


class TestRadialProfile:
    def test_round_derivative(self, round2):
        prof = radial_profile(round2, (1, 0), r_max=2.0, n=4)
        assert prof.radii[-1] == pytest.approx(2.0)
        assert prof.derivatives[-1] == pytest.approx(4.0)
        assert prof.all_positive
        # cross-check against 1-D finite differences of r -> u(ra)
        h = 1e-6
        a = np.array([1, 0], dtype=complex)
        for r, dv in zip(prof.radii, prof.derivatives):
            fd = (round2.value((r + h) * a) - round2.value((r - h) * a)) / (2 * h)
            assert dv == pytest.approx(fd, abs=1e-6)

    def test_constant_field_violates(self):
        f = PotentialField(2, Const(3.0))
        prof = radial_profile(f, (1, 0), r_max=1.0, n=5)
        assert not prof.all_positive
        assert len(prof.violations) == 5

    def test_quartic_many_directions(self, quartic2):
        rng = np.random.default_rng(5)
        for _ in range(20):
            a = rng.normal(size=2) + 1j * rng.normal(size=2)
            a /= np.linalg.norm(a)
            prof = radial_profile(quartic2, a, r_max=2.0, n=50)
            assert prof.all_positive

    def test_non_unit_direction_rejected(self, round2):
        with pytest.raises(ValueError, match="unit"):
            radial_profile(round2, (2, 0), r_max=1.0, n=5)


class TestNonRealField:
    def test_levi_flags_non_real(self):
        # u = z1^2 z̄1 has a genuinely non-Hermitian second-derivative matrix
        f = PotentialField(1, parse_expression("z1^2*cj(z1)", 1))
        with pytest.raises(EvalDomainError, match="not real-valued"):
            levi_form(f, (0.5 + 0.5j,))
