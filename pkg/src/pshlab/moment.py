"""Moment map, level sets, quotient coordinates, degree, and gradient fibers on C^2.

The moment map of a circle-invariant strictly plurisubharmonic potential
is realized by the closed form mu(p) = <grad(phi)(p), p> / 2.  The formula
is a pinned convention, not an assertion: construction runs an oracle that
compares the finite-difference differential of mu against the contraction
of the Levi 2-form with the rotation field V(p) = i p, and rejects any
field that fails.  The 2-form convention is

    omega_H(a, b) = 2 Im( sum_jk H_jk a_j conj(b_k) ),

which makes the oracle identity exact for phi = |z|^2 + |w|^2.

Level sets are sampled by radial root-finding, the induced map to the
projective line is [d(phi)/dz̄ : d(phi)/dw̄], and its topological degree is
computed two independent ways: signed preimage counting with Newton
refinement on chart coordinates, and the pullback of the normalized
sphere area over an icosahedral triangulation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .expr import PotentialField, sample_ball
from .geometry import BallSampler, check_strict_psh, real_hessian_matrices, realify, unrealify
from .rootfind import damped_newton, multistart, substream
from .symmetry import (
    GroupAction, PreconditionError, QuadratureRule, invariance_residual,
)


# --------------------------------------------------------------------------
# Projective line
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuotientPoint:
    """A point of P^1 stored chart-normalized with max-norm-1 representative."""
    alpha: complex
    beta: complex
    chart: int        # 0: |alpha| >= |beta| and alpha == 1; 1: beta == 1

    @classmethod
    def of(cls, alpha, beta):
        alpha, beta = complex(alpha), complex(beta)
        if alpha == 0 and beta == 0:
            raise ValueError("(0, 0) does not represent a point of P^1")
        if abs(alpha) >= abs(beta):
            return cls(1.0 + 0j, beta / alpha, 0)
        return cls(alpha / beta, 1.0 + 0j, 1)

    @classmethod
    def from_chart(cls, chart, zeta):
        zeta = complex(zeta)
        if chart == 0:
            return cls.of(1.0, zeta)
        return cls.of(zeta, 1.0)

    def coord(self, chart):
        """Affine coordinate in the requested chart (may be huge off-chart)."""
        if chart == 0:
            return self.beta / self.alpha
        return self.alpha / self.beta

    def sphere(self):
        """Unit-sphere image under [a : b] -> (2 Re(ā b), 2 Im(ā b), |a|^2 - |b|^2)."""
        n = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        cross = self.alpha.conjugate() * self.beta
        return np.array([2 * cross.real, 2 * cross.imag,
                         abs(self.alpha) ** 2 - abs(self.beta) ** 2]) / n

    @classmethod
    def from_sphere(cls, xyz):
        x, y, z = (float(c) for c in xyz)
        if z >= 0:
            a = np.sqrt((1 + z) / 2)
            return cls.of(a, complex(x, y) / (2 * a))
        b = np.sqrt((1 - z) / 2)
        return cls.of(complex(x, -y) / (2 * b), b)


def chordal_distance(q1: QuotientPoint, q2: QuotientPoint):
    num = abs(q1.alpha * q2.beta - q2.alpha * q1.beta)
    n1 = np.hypot(abs(q1.alpha), abs(q1.beta))
    n2 = np.hypot(abs(q2.alpha), abs(q2.beta))
    return float(num / (n1 * n2))


# --------------------------------------------------------------------------
# Moment map field
# --------------------------------------------------------------------------

class MomentMapField:
    """A circle-invariant strictly-PSH potential on C^2 with its moment map.

    Construction gates: invariance residual below 1e-10, a strict-PSH
    certificate over the working radius, and the Hamiltonian oracle
    residual below 1e-6.  Fields failing any gate are rejected.
    """

    INVARIANCE_TOL = 1e-10
    HAMILTONIAN_TOL = 1e-6

    def __init__(self, field: PotentialField, radius=2.5, psh_epsilon=1e-8, seed=0):
        if field.dimension != 2:
            raise ValueError("moment-map machinery is specific to C^2")
        self.field = field
        self.radius = float(radius)
        action = GroupAction.circle([1, 1])
        rule = QuadratureRule.for_circle(action, 8)
        inv = invariance_residual(field, action, rule, n=64, seed=seed)
        if inv.max_residual > self.INVARIANCE_TOL:
            raise PreconditionError(
                f"potential is not circle-invariant: residual "
                f"{inv.max_residual:.3e} at {inv.witness_point}")
        self.invariance = inv
        cert = check_strict_psh(
            field, BallSampler(2, self.radius, 200, seed=seed + 1), psh_epsilon)
        if not cert.passed:
            raise PreconditionError(
                f"potential is not strictly plurisubharmonic on radius "
                f"{self.radius}: min Levi eigenvalue {cert.min_levi_eigenvalue:.3e}")
        self.psh_certificate = cert
        rng = substream(seed, "hamiltonian")
        samples = sample_ball(2, self.radius, 50, rng)
        self.hamiltonian_residual = verify_hamiltonian(self, samples)
        if self.hamiltonian_residual > self.HAMILTONIAN_TOL:
            raise PreconditionError(
                f"moment-map closed form fails the Hamiltonian oracle: "
                f"residual {self.hamiltonian_residual:.3e}")

    def mu_values(self, pts):
        """mu = Re sum_j (du/dz̄_j) conj(p_j), vectorized over (N, 2) points."""
        pts = np.asarray(pts, dtype=complex).reshape(-1, 2)
        g = self.field.grad_dbar(pts)
        return np.real(np.sum(g * np.conj(pts), axis=1))

    def grad_pairs(self, pts):
        return self.field.grad_dbar(pts)


def moment_map(m: MomentMapField, p):
    """mu(p) = <grad(phi)(p), p> / 2 under the pinned gradient convention."""
    p = np.asarray(p, dtype=complex).ravel()
    return float(m.mu_values(p[None, :])[0])


def _omega_contraction(H, v, b):
    """omega_H(v, b) = 2 Im(sum_jk H_jk v_j conj(b_k))."""
    return 2.0 * float(np.imag(v @ H @ np.conj(b)))


def verify_hamiltonian(m: MomentMapField, samples, h=1e-6):
    """Oracle for the closed form: d(mu) = omega(V, .) with V(p) = i p.

    Compares the central-difference differential of mu with the 2-form
    contraction in every realified coordinate direction; the residual is
    normalized by |p| * lambda_max(Levi).
    """
    samples = np.asarray(samples, dtype=complex).reshape(-1, 2)
    if samples.size == 0:
        raise ValueError("need at least one sample")
    basis = [np.array([1, 0], dtype=complex), np.array([1j, 0], dtype=complex),
             np.array([0, 1], dtype=complex), np.array([0, 1j], dtype=complex)]
    worst = 0.0
    for p in samples:
        H = m.field.levi_matrices(p[None, :])[0]
        H = 0.5 * (H + H.conj().T)
        lam_max = float(np.linalg.eigvalsh(H)[-1])
        scale = max(float(np.linalg.norm(p)) * lam_max, 1e-12)
        v = 1j * p
        for b in basis:
            d_mu = (m.mu_values((p + h * b)[None, :])[0]
                    - m.mu_values((p - h * b)[None, :])[0]) / (2 * h)
            res = abs(d_mu - _omega_contraction(H, v, b)) / scale
            worst = max(worst, res)
    return worst


# --------------------------------------------------------------------------
# Level sets
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelSetSample:
    level: float
    points: np.ndarray            # (N, 2), all satisfying |mu - b| < 1e-10
    directions: np.ndarray        # unit directions used
    multi_root_flags: np.ndarray  # directions where mu - b crossed more than once
    skipped: int                  # directions with no root inside the radius


def _lift_rays(m: MomentMapField, b, dirs, r_max):
    """Smallest radial root of mu(r a) = b per direction, vectorized.

    Returns (radii, ok mask, multi-crossing mask).  Uses a coarse scan for
    the first bracket (also detecting non-monotone rays), bisection, and a
    Newton polish to |mu - b| ~ 1e-13.
    """
    dirs = np.asarray(dirs, dtype=complex).reshape(-1, 2)
    n = len(dirs)
    grid = np.linspace(0.0, r_max, 65)
    vals = np.empty((len(grid), n))
    for i, r in enumerate(grid):
        vals[i] = m.mu_values(dirs * r)
    above = vals > b
    crossings = np.sum(above[1:] != above[:-1], axis=0)
    multi = crossings > 1
    ok = above.any(axis=0) & ~above[0]
    first = np.argmax(above, axis=0)          # first grid index above b
    lo = np.where(ok, grid[np.maximum(first - 1, 0)], 0.0)
    hi = np.where(ok, grid[first], r_max)
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        v = m.mu_values(dirs * mid[:, None])
        lower = v < b
        lo = np.where(lower, mid, lo)
        hi = np.where(lower, hi, mid)
    r = 0.5 * (lo + hi)
    h = 1e-7
    for _ in range(3):
        v = m.mu_values(dirs * r[:, None])
        dv = (m.mu_values(dirs * (r + h)[:, None])
              - m.mu_values(dirs * (r - h)[:, None])) / (2 * h)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(np.abs(dv) > 1e-14, (v - b) / dv, 0.0)
        r = np.clip(r - step, 0.0, r_max)
    return r, ok, multi


def sample_level_set(m: MomentMapField, b, n, seed) -> LevelSetSample:
    """Points on the level set mu = b along n seeded unit directions in S^3."""
    b = float(b)
    mu0 = moment_map(m, (0, 0))
    if b <= mu0:
        raise PreconditionError(f"level {b} is not above mu(0) = {mu0}")
    rng = substream(seed, "level-set")
    raw = rng.normal(size=(n, 4))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    dirs = raw[:, 0::2] + 1j * raw[:, 1::2]
    r, ok, multi = _lift_rays(m, b, dirs, m.radius)
    if multi.any():
        warnings.warn(f"{int(multi.sum())} direction(s) crossed the level more "
                      "than once; smallest roots returned", stacklevel=2)
    if (~ok).any():
        warnings.warn(f"{int((~ok).sum())} direction(s) found no root within "
                      f"radius {m.radius}; skipped", stacklevel=2)
    pts = (dirs * r[:, None])[ok]
    mu_err = np.abs(m.mu_values(pts) - b)
    keep = mu_err < 1e-10
    return LevelSetSample(level=b, points=pts[keep], directions=dirs[ok][keep],
                          multi_root_flags=multi[ok][keep], skipped=int((~ok).sum()))


def induced_map(m: MomentMapField, p) -> QuotientPoint:
    """[d(phi)/dz̄ : d(phi)/dw̄] at a level-set point, chart-normalized."""
    p = np.asarray(p, dtype=complex).ravel()
    g = m.grad_pairs(p[None, :])[0]
    if g[0] == 0 and g[1] == 0:
        raise ValueError("gradient vanishes; the induced map is undefined here")
    return QuotientPoint.of(g[0], g[1])


def induced_map_closure(m: MomentMapField, b):
    """Batch self-map of P^1: lift [a:b] to the level set along its ray, then map.

    The returned callable takes and returns (N, 2) homogeneous pairs, the
    contract expected by :func:`compute_degree`.
    """
    def map_batch(pairs):
        pairs = np.asarray(pairs, dtype=complex).reshape(-1, 2)
        dirs = pairs / np.linalg.norm(pairs, axis=1, keepdims=True)
        r, ok, _ = _lift_rays(m, b, dirs, m.radius)
        if not ok.all():
            raise PreconditionError("a ray failed to reach the level set")
        return m.grad_pairs(dirs * r[:, None])
    return map_batch


@dataclass(frozen=True)
class HomotopyCertificate:
    level: float
    n_points: int
    n_s: int
    min_value: float
    witness_point: tuple
    witness_s: float
    passed: bool


def homotopy_positivity(m: MomentMapField, b, n_points, n_s, seed) -> HomotopyCertificate:
    """min over the level set and s in [0,1] of (1-s) <grad phi, a> + s |a|^2.

    Positivity is the constructive heart of the degree argument; a
    non-positive witness falsifies the invariance/positivity premises.
    """
    sample = sample_level_set(m, b, n_points, seed)
    pts = sample.points
    g = 2.0 * m.grad_pairs(pts)
    radial = np.real(np.sum(g * np.conj(pts), axis=1))
    norms = np.sum(np.abs(pts) ** 2, axis=1)
    s_grid = np.linspace(0.0, 1.0, n_s)
    values = (1 - s_grid[None, :]) * radial[:, None] + s_grid[None, :] * norms[:, None]
    flat = int(np.argmin(values))
    i, j = divmod(flat, n_s)
    return HomotopyCertificate(
        level=float(b), n_points=len(pts), n_s=n_s,
        min_value=float(values[i, j]), witness_point=tuple(pts[i]),
        witness_s=float(s_grid[j]), passed=bool(values[i, j] > 0))


# --------------------------------------------------------------------------
# Topological degree
# --------------------------------------------------------------------------

class DegreeError(Exception):
    pass


def _icosphere(level):
    """Icosahedral triangulation of S^2, subdivided ``level`` times.

    Faces are re-wound so every signed spherical area is positive, fixing
    the orientation used by both degree methods.
    """
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [v for v in verts]
    for _ in range(level):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                v = verts[i] + verts[j]
                verts.append(v / np.linalg.norm(v))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    V = np.array(verts)
    F = np.array(faces, dtype=int)
    areas = _signed_spherical_areas(V[F[:, 0]], V[F[:, 1]], V[F[:, 2]])
    flip = areas < 0
    F[flip] = F[flip][:, [0, 2, 1]]
    return V, F


def _signed_spherical_areas(w1, w2, w3):
    """Signed solid angles of spherical triangles (van Oosterom-Strackee)."""
    triple = np.einsum("ij,ij->i", w1, np.cross(w2, w3))
    denom = (1.0 + np.einsum("ij,ij->i", w1, w2)
             + np.einsum("ij,ij->i", w2, w3) + np.einsum("ij,ij->i", w3, w1))
    return 2.0 * np.arctan2(triple, denom)


def _pairs_to_sphere(pairs):
    pairs = np.asarray(pairs, dtype=complex)
    n = np.abs(pairs[:, 0]) ** 2 + np.abs(pairs[:, 1]) ** 2
    cross = np.conj(pairs[:, 0]) * pairs[:, 1]
    return np.stack([2 * cross.real, 2 * cross.imag,
                     np.abs(pairs[:, 0]) ** 2 - np.abs(pairs[:, 1]) ** 2], axis=1) / n[:, None]


def _sphere_to_pairs(xyz):
    xyz = np.asarray(xyz, dtype=float)
    out = np.empty((len(xyz), 2), dtype=complex)
    north = xyz[:, 2] >= 0
    a = np.sqrt((1 + xyz[north, 2]) / 2)
    out[north, 0] = a
    out[north, 1] = (xyz[north, 0] + 1j * xyz[north, 1]) / (2 * a)
    b = np.sqrt((1 - xyz[~north, 2]) / 2)
    out[~north, 0] = (xyz[~north, 0] - 1j * xyz[~north, 1]) / (2 * b)
    out[~north, 1] = b
    return out


def _degree_area(map_batch, subdivisions=3):
    V, F = _icosphere(subdivisions)
    images = map_batch(_sphere_to_pairs(V))
    S = _pairs_to_sphere(images)
    total = float(np.sum(_signed_spherical_areas(S[F[:, 0]], S[F[:, 1]], S[F[:, 2]])))
    integral = total / (4 * np.pi)
    degree = int(np.round(integral))
    if abs(integral - degree) > 0.1:
        raise DegreeError(
            f"area integral {integral:.4f} is not close to an integer; "
            "refine the triangulation")
    return degree, integral


def _chart_points(charts, zetas):
    pairs = np.empty((len(zetas), 2), dtype=complex)
    c0 = charts == 0
    pairs[c0, 0] = 1.0
    pairs[c0, 1] = zetas[c0]
    pairs[~c0, 0] = zetas[~c0]
    pairs[~c0, 1] = 1.0
    return pairs


def _target_coord(pairs, target_chart):
    with np.errstate(divide="ignore", invalid="ignore"):
        if target_chart == 0:
            return pairs[:, 1] / pairs[:, 0]
        return pairs[:, 0] / pairs[:, 1]


_SEED_RADII = (0.0, 0.45, 0.8, 1.0)
_SEED_ANGLES = 8


def _newton_seeds():
    charts = []
    zetas = []
    for chart in (0, 1):
        for r in _SEED_RADII:
            if r == 0.0:
                charts.append(chart)
                zetas.append(0j)
                continue
            for k in range(_SEED_ANGLES):
                charts.append(chart)
                zetas.append(r * np.exp(2j * np.pi * k / _SEED_ANGLES))
    return np.array(charts), np.array(zetas, dtype=complex)


def _preimage_count(map_batch, target: QuotientPoint, fd_step=1e-6,
                    max_iter=30, jac_floor=1e-6):
    """Signed preimage count of one target; returns (count, solutions, ok)."""
    tc = target.chart
    zt = target.coord(tc)
    charts, zetas = _newton_seeds()
    active = np.ones(len(zetas), dtype=bool)

    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        z = zetas[idx]
        ch = charts[idx]
        offsets = np.array([0.0, fd_step, -fd_step, 1j * fd_step, -1j * fd_step])
        stacked_z = (z[:, None] + offsets[None, :]).ravel()
        stacked_c = np.repeat(ch, len(offsets))
        images = map_batch(_chart_points(stacked_c, stacked_z))
        R = (_target_coord(images, tc) - zt).reshape(len(idx), len(offsets))
        bad = ~np.isfinite(R).all(axis=1)
        r0, rxp, rxm, ryp, rym = R[:, 0], R[:, 1], R[:, 2], R[:, 3], R[:, 4]
        dx = (rxp - rxm) / (2 * fd_step)
        dy = (ryp - rym) / (2 * fd_step)
        det = dx.real * dy.imag - dy.real * dx.imag
        with np.errstate(divide="ignore", invalid="ignore"):
            # solve [[dx.re, dy.re], [dx.im, dy.im]] step = -r0
            sx = (-r0.real * dy.imag + r0.imag * dy.real) / det
            sy = (-r0.imag * dx.real + r0.real * dx.imag) / det
        step = sx + 1j * sy
        bad |= ~np.isfinite(step)
        norm = np.abs(step)
        step = np.where(norm > 0.5, step * (0.5 / np.maximum(norm, 1e-300)), step)
        z_new = z + np.where(bad, 0.0, step)
        flip = np.abs(z_new) > 1.25
        z_new[flip] = 1.0 / z_new[flip]
        ch_new = np.where(flip, 1 - ch, ch)
        zetas[idx] = z_new
        charts[idx] = ch_new
        active[idx[bad]] = False

    # classify convergence by the chordal residual of the image
    pairs = _chart_points(charts, zetas)
    images = map_batch(pairs)
    tg = np.array([target.alpha, target.beta])
    num = np.abs(images[:, 0] * tg[1] - tg[0] * images[:, 1])
    den = (np.linalg.norm(images, axis=1) * np.linalg.norm(tg))
    converged = (num / den < 1e-9) & np.isfinite(num)

    sols = []
    for i in np.nonzero(converged)[0]:
        q = QuotientPoint.of(pairs[i, 0], pairs[i, 1])
        if not any(chordal_distance(q, s) < 1e-6 for s in sols):
            sols.append(q)

    count = 0
    for q in sols:
        ch = q.chart
        z = q.coord(ch)
        offsets = np.array([fd_step, -fd_step, 1j * fd_step, -1j * fd_step])
        images = map_batch(_chart_points(np.full(4, ch), z + offsets))
        R = _target_coord(images, tc)
        dx = (R[0] - R[1]) / (2 * fd_step)
        dy = (R[2] - R[3]) / (2 * fd_step)
        det = float(dx.real * dy.imag - dy.real * dx.imag)
        if abs(det) < jac_floor:
            return 0, sols, False   # target too close to a critical value
        count += 1 if det > 0 else -1
    return count, sols, True


@dataclass(frozen=True)
class DegreeCertificate:
    method: str
    degree: int
    cross_check_degree: int
    per_target_counts: tuple
    targets: tuple               # sphere coordinates of the regular targets used
    area_integral: float
    homotopy_passed: bool | None
    passed: bool


def compute_degree(map_batch, seed, method="preimage", n_targets=5,
                   subdivisions=3) -> DegreeCertificate:
    """Topological degree of a P^1 self-map by two independent methods.

    ``map_batch`` maps (N, 2) homogeneous pairs to (N, 2) homogeneous
    pairs.  The preimage method Newton-refines grid seeds toward >= 5
    random regular targets and sums Jacobian signs; the area method sums
    signed spherical areas of image triangles over an icosahedral mesh.
    The certificate passes iff both methods agree and all per-target
    counts coincide.
    """
    if method not in ("preimage", "area"):
        raise ValueError(f"unknown method {method!r}")
    rng = substream(seed, "degree", "targets")
    counts = []
    targets = []
    attempts = 0
    while len(counts) < n_targets and attempts < 4 * n_targets:
        attempts += 1
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        target = QuotientPoint.from_sphere(v)
        count, _, ok = _preimage_count(map_batch, target)
        if ok:
            counts.append(count)
            targets.append(tuple(v))
    if len(counts) < n_targets:
        raise DegreeError("could not find enough regular targets")
    degree_pre = counts[0]
    counts_agree = all(c == degree_pre for c in counts)
    degree_area, integral = _degree_area(map_batch, subdivisions)
    if method == "preimage":
        degree, cross = degree_pre, degree_area
    else:
        degree, cross = degree_area, degree_pre
    return DegreeCertificate(
        method=method, degree=degree, cross_check_degree=cross,
        per_target_counts=tuple(counts), targets=tuple(targets),
        area_integral=integral, homotopy_passed=None,
        passed=bool(counts_agree and degree_pre == degree_area))


def degree_certificate_for_level(m: MomentMapField, b, seed, method="preimage",
                                 n_targets=5, subdivisions=3,
                                 homotopy_points=200, homotopy_s=11) -> DegreeCertificate:
    """Full pipeline for one level: homotopy positivity plus both degree methods."""
    hom = homotopy_positivity(m, b, homotopy_points, homotopy_s, seed)
    cert = compute_degree(induced_map_closure(m, b), seed, method=method,
                          n_targets=n_targets, subdivisions=subdivisions)
    return DegreeCertificate(
        method=cert.method, degree=cert.degree,
        cross_check_degree=cert.cross_check_degree,
        per_target_counts=cert.per_target_counts, targets=cert.targets,
        area_integral=cert.area_integral, homotopy_passed=hom.passed,
        passed=bool(cert.passed and hom.passed))


# --------------------------------------------------------------------------
# Gradient fibers
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FiberCluster:
    center: np.ndarray           # complex 2-vector
    members: int
    residual: float              # |grad f - c| at the center
    probe_spread: float          # max pairwise spread of perturbed re-solves
    isolated: bool
    u_value: float


@dataclass(frozen=True)
class FiberReport:
    target: tuple
    starts: int
    clusters: tuple
    non_converged: int
    phase_hypothesis_ok: bool    # equal gradients gave equal potential values
    max_u_spread: float


def gradient_fiber(f: PotentialField, c, starts, seed, box_radius=2.0,
                   newton_tol=1e-10, cluster_radius=1e-6, probe_scale=1e-4,
                   probe_count=20, psh_check=True) -> FiberReport:
    """Multistart Newton solve of grad(f) = c on C^2 with isolation probes.

    Each cluster is re-solved from ``probe_count`` perturbations of size
    ``probe_scale``; a spread comparable to the perturbation indicates a
    positive-dimensional solution set, a collapse to the center indicates
    an isolated point.  Non-converged starts are tallied, never counted.
    """
    if f.dimension != 2:
        raise ValueError("gradient fibers are computed on C^2")
    c = np.asarray(c, dtype=complex).ravel()
    if psh_check:
        cert = check_strict_psh(f, BallSampler(2, box_radius, 150, seed=seed), 0.0)
        if not cert.passed:
            raise PreconditionError(
                "field is not strictly plurisubharmonic on the search box")
    c_real = realify(c)

    def fun(x):
        return realify(2.0 * f.grad_dbar([unrealify(x)])[0]) - c_real

    def jac(x):
        return real_hessian_matrices(f, [unrealify(x)])[0]

    rng = substream(seed, "fiber", "starts")
    start_pts = [realify(p) for p in sample_ball(2, box_radius, starts, rng)]
    clusters, failures = multistart(fun, jac, start_pts, tol=newton_tol,
                                    cluster_radius=cluster_radius,
                                    max_step=box_radius)

    probe_rng = substream(seed, "fiber", "probe")
    out = []
    for cl in clusters:
        center = unrealify(cl.center)
        reconverged = []
        for _ in range(probe_count):
            delta = probe_rng.normal(size=4)
            delta *= probe_scale / np.linalg.norm(delta)
            r = damped_newton(fun, jac, cl.center + delta, tol=newton_tol,
                              max_step=box_radius)
            if r.converged:
                reconverged.append(r.point)
        if len(reconverged) >= 2:
            P = np.array(reconverged)
            spread = float(max(np.linalg.norm(P[i] - P[j])
                               for i in range(len(P)) for j in range(i + 1, len(P))))
        else:
            spread = 0.0
        out.append(FiberCluster(
            center=center, members=cl.members, residual=cl.residual,
            probe_spread=spread, isolated=spread < 0.1 * probe_scale,
            u_value=float(f.values(center[None, :])[0])))

    u_vals = [cl.u_value for cl in out]
    spread_u = float(max(u_vals) - min(u_vals)) if len(u_vals) > 1 else 0.0
    return FiberReport(
        target=tuple(c), starts=starts, clusters=tuple(out),
        non_converged=len(failures), phase_hypothesis_ok=spread_u <= 1e-8,
        max_u_spread=spread_u)
