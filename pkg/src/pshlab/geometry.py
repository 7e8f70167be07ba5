"""Complex gradients, Levi forms, real Hessians, and positivity certificates.

Conventions are pinned once and used by every downstream module:

* gradient(u)      := 2 * (du/dz̄_1, ..., du/dz̄_d)       (complex d-vector)
* Levi matrix      := H_jk = d²u / dz_j dz̄_k              (no extra factor)
* real inner       := <a, b> = Re sum_j a_j conj(b_j)
* complex structure J : v -> i v
* realification    := interleaved (Re z_1, Im z_1, Re z_2, Im z_2, ...)

Under these, the realified gradient equals the true gradient of u on R^{2d},
and the Levi form satisfies v† H v = (H_u(v, v) + H_u(Jv, Jv)) / 4 with H_u
the real Hessian; both identities are exercised by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import EvalDomainError, PotentialField, evaluate, sample_ball


def realify(v):
    """Complex (d,) vector -> interleaved real (2d,) vector."""
    v = np.asarray(v, dtype=complex).ravel()
    out = np.empty(2 * v.size)
    out[0::2] = v.real
    out[1::2] = v.imag
    return out


def unrealify(x):
    x = np.asarray(x, dtype=float).ravel()
    return x[0::2] + 1j * x[1::2]


def real_inner(a, b):
    """<a, b> = Re sum_j a_j conj(b_j) on complex vectors."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    return float(np.real(np.sum(a * b.conjugate())))


def jmul(v):
    """The complex structure J: v -> i v."""
    return 1j * np.asarray(v, dtype=complex)


def realified_matrix(A):
    """Realify a complex-linear map A on C^d to a 2d x 2d real matrix."""
    A = np.asarray(A, dtype=complex)
    d = A.shape[0]
    M = np.zeros((2 * d, 2 * d))
    for j in range(d):
        for k in range(d):
            a = A[j, k]
            M[2 * j, 2 * k] = a.real
            M[2 * j, 2 * k + 1] = -a.imag
            M[2 * j + 1, 2 * k] = a.imag
            M[2 * j + 1, 2 * k + 1] = a.real
    return M


@dataclass(frozen=True)
class WirtingerGradient:
    point: np.ndarray
    components: np.ndarray       # g_j = du/dz̄_j

    @property
    def complex_gradient(self):
        return 2.0 * self.components

    @property
    def real_gradient(self):
        """Gradient of u on R^{2d} in the interleaved realification."""
        return realify(self.complex_gradient)


@dataclass(frozen=True)
class LeviForm:
    point: np.ndarray
    matrix: np.ndarray           # Hermitian-symmetrized
    eigenvalues: np.ndarray      # ascending, real
    asymmetry: float             # max |H - H†| before symmetrization

    @property
    def min_eigenvalue(self):
        return float(self.eigenvalues[0])


@dataclass(frozen=True)
class RealHessian:
    point: np.ndarray
    matrix: np.ndarray           # symmetric 2d x 2d
    asymmetry: float

    def quadratic_form(self, v):
        """H_u(v, v) for a complex tangent vector v (realified internally)."""
        x = realify(v)
        return float(x @ self.matrix @ x)


@dataclass(frozen=True)
class PSHCertificate:
    domain_radius: float
    sample_count: int
    seed: int
    epsilon: float
    min_levi_eigenvalue: float
    passed: bool
    witness: tuple | None = None


@dataclass(frozen=True)
class BallSampler:
    """Deterministic uniform sampler over a complex ball."""
    dimension: int
    radius: float
    count: int
    seed: int

    def points(self):
        rng = np.random.default_rng(self.seed)
        return sample_ball(self.dimension, self.radius, self.count, rng)


def complex_gradient(f: PotentialField, p) -> WirtingerGradient:
    """du/dz̄ components at p, with the 2x convention exposed as complex_gradient."""
    p = np.asarray(p, dtype=complex).ravel()
    comps = np.array([evaluate(f.dbar(j), p) for j in range(1, f.dimension + 1)])
    return WirtingerGradient(point=p, components=comps)


_HERMITIAN_FLAG_TOL = 1e-8


def levi_form(f: PotentialField, p) -> LeviForm:
    """Levi matrix at p, Hermitian-symmetrized with the residual recorded."""
    p = np.asarray(p, dtype=complex).ravel()
    d = f.dimension
    H = np.array([[evaluate(f.levi_entry(j, k), p) for k in range(1, d + 1)]
                  for j in range(1, d + 1)])
    asym = float(np.max(np.abs(H - H.conj().T)))
    scale = max(1.0, float(np.max(np.abs(H))))
    if asym > _HERMITIAN_FLAG_TOL * scale:
        raise EvalDomainError(
            f"Levi matrix asymmetry {asym:.3e} exceeds {_HERMITIAN_FLAG_TOL}: "
            "field is not real-valued", point=tuple(p))
    Hs = 0.5 * (H + H.conj().T)
    eig = np.linalg.eigvalsh(Hs)
    return LeviForm(point=p, matrix=Hs, eigenvalues=eig, asymmetry=asym)


def real_hessian(f: PotentialField, p) -> RealHessian:
    """Real 2d x 2d Hessian assembled from second Wirtinger derivatives.

    With a_jk = d²u/dz_j dz_k and b_jk = d²u/dz_j dz̄_k (u real-valued):
    d²u/dx_j dx_k =  2 Re(a + b),  d²u/dy_j dy_k = -2 Re(a) + 2 Re(b),
    d²u/dx_j dy_k = -2 Im(a) + 2 Im(b).
    """
    p = np.asarray(p, dtype=complex).ravel()
    d = f.dimension
    a = np.array([[evaluate(f.dzz_entry(j, k), p) for k in range(1, d + 1)]
                  for j in range(1, d + 1)])
    b = np.array([[evaluate(f.levi_entry(j, k), p) for k in range(1, d + 1)]
                  for j in range(1, d + 1)])
    M = np.zeros((2 * d, 2 * d))
    for j in range(d):
        for k in range(d):
            M[2 * j, 2 * k] = 2 * (a[j, k].real + b[j, k].real)
            M[2 * j + 1, 2 * k + 1] = -2 * a[j, k].real + 2 * b[j, k].real
            M[2 * j, 2 * k + 1] = -2 * a[j, k].imag + 2 * b[j, k].imag
            M[2 * j + 1, 2 * k] = -2 * a[j, k].imag - 2 * b[j, k].imag
    asym = float(np.max(np.abs(M - M.T)))
    return RealHessian(point=p, matrix=0.5 * (M + M.T), asymmetry=asym)


def real_hessian_matrices(f: PotentialField, pts):
    """Batch version of :func:`real_hessian`: (N, 2d, 2d) symmetrized matrices."""
    pts = np.asarray(pts, dtype=complex).reshape(-1, f.dimension)
    a = f.dzz_matrices(pts)
    b = f.levi_matrices(pts)
    n, d = a.shape[0], f.dimension
    M = np.zeros((n, 2 * d, 2 * d))
    M[:, 0::2, 0::2] = 2 * (a.real + b.real)
    M[:, 1::2, 1::2] = -2 * a.real + 2 * b.real
    M[:, 0::2, 1::2] = -2 * a.imag + 2 * b.imag
    M[:, 1::2, 0::2] = -2 * a.imag - 2 * b.imag
    return 0.5 * (M + np.swapaxes(M, 1, 2))


def check_strict_psh(f: PotentialField, sampler: BallSampler, epsilon) -> PSHCertificate:
    """Sample-based strict-plurisubharmonicity certificate over a ball.

    Pass iff the minimum sampled Levi eigenvalue exceeds ``epsilon``; the
    witness point of the minimum is recorded on failure.
    """
    if sampler.count < 100:
        raise ValueError("sampler must yield at least 100 points")
    pts = sampler.points()
    H = f.levi_matrices(pts)
    Hs = 0.5 * (H + np.conj(np.swapaxes(H, -1, -2)))
    mins = np.linalg.eigvalsh(Hs)[:, 0]
    idx = int(np.argmin(mins))
    min_val = float(mins[idx])
    passed = min_val > epsilon
    return PSHCertificate(
        domain_radius=sampler.radius, sample_count=sampler.count, seed=sampler.seed,
        epsilon=float(epsilon), min_levi_eigenvalue=min_val, passed=passed,
        witness=None if passed else tuple(pts[idx]))


def levi_applied(levi_matrix, v):
    """Levi form at the tangent vector v: L(v) = sum_jk H_jk v_j conj(v_k).

    The index convention H_jk = d²u/dz_j dz̄_k pairs the holomorphic slot
    with v and the antiholomorphic slot with conj(v); swapping the pairing
    evaluates L at conj(v) instead and breaks the Hessian identity below.
    """
    v = np.asarray(v, dtype=complex).ravel()
    return float(np.real(v @ levi_matrix @ v.conjugate()))


def levi_hessian_identity_residual(f: PotentialField, p, v) -> float:
    """|L(v) - (H_u(v,v) + H_u(Jv,Jv)) / 4| with both sides symbolic-exact."""
    v = np.asarray(v, dtype=complex).ravel()
    if not np.any(v):
        raise ValueError("tangent vector must be nonzero")
    levi = levi_form(f, p)
    lhs = levi_applied(levi.matrix, v)
    hess = real_hessian(f, p)
    rhs = 0.25 * (hess.quadratic_form(v) + hess.quadratic_form(jmul(v)))
    return abs(lhs - rhs)


@dataclass(frozen=True)
class RadialProfile:
    direction: np.ndarray
    radii: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray      # <grad u(r a), a> under the 2*dbar convention
    violations: tuple            # radii where the derivative fails to be positive

    @property
    def all_positive(self):
        return len(self.violations) == 0


def radial_profile(f: PotentialField, direction, r_max, n) -> RadialProfile:
    """Profile of r -> u(r a) along a unit direction with its radial derivative.

    The derivative column is <grad u(ra), a>, which equals d/dr u(ra) under
    the pinned conventions; r = 0 would contribute derivative 0 by symmetry
    and is excluded from the grid.
    """
    a = np.asarray(direction, dtype=complex).ravel()
    norm = np.linalg.norm(a)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"direction must be a unit vector, |a| = {norm}")
    if n < 2:
        raise ValueError("need at least 2 radii")
    radii = np.linspace(r_max / n, r_max, n)
    values = np.empty(n)
    derivs = np.empty(n)
    for i, r in enumerate(radii):
        p = r * a
        values[i] = f.value(p)
        derivs[i] = real_inner(complex_gradient(f, p).complex_gradient, a)
    violations = tuple(float(r) for r, dv in zip(radii, derivs) if dv <= 0)
    return RadialProfile(direction=a, radii=radii, values=values,
                         derivatives=derivs, violations=violations)
