"""Compact group actions on C^d: averaging, orbits, and critical confinement.

Supported actions are linear and unitary: circle actions with integer
weights, torus actions given by an integer weight matrix, finite unitary
groups given by an explicit matrix list, and SU(2) in its fundamental
representation on C^2.  Haar measure is realized by quadrature rules that
are exact for the polynomial degrees used at desk scale, and averaging is
performed symbolically by substituting each node's matrix into the
expression tree and collecting terms, so averaged fields remain ordinary
potential fields with exact derivatives.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .expr import (
    ConjVar, PotentialField, Var, _terms, chop, is_real_valued, max_abs_coeff,
    sample_ball, substitute_linear,
)
from .geometry import (
    BallSampler, check_strict_psh, real_hessian_matrices, realified_matrix,
    realify, unrealify,
)
from .rootfind import multistart, substream

_UNITARY_TOL = 1e-10

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class PreconditionError(Exception):
    """A documented operation precondition failed; never silently ignored."""


def _check_unitary(U, what):
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"{what}: expected a square matrix, got shape {U.shape}")
    err = np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))
    if err > _UNITARY_TOL:
        raise ValueError(f"{what}: matrix is not unitary (residual {err:.2e})")
    return U


class GroupAction:
    """A compact group acting linearly by unitaries on C^d.

    ``generators`` is a tuple of anti-Hermitian matrices spanning the
    infinitesimal action (empty for finite groups).
    """

    def __init__(self, kind, dimension, weights=None, weight_matrix=None,
                 elements=None, generators=()):
        self.kind = kind
        self.dimension = dimension
        self.weights = weights
        self.weight_matrix = weight_matrix
        self.elements = elements
        self.generators = tuple(np.asarray(A, dtype=complex) for A in generators)
        for A in self.generators:
            err = np.max(np.abs(A + A.conj().T))
            if err > _UNITARY_TOL:
                raise ValueError(f"generator is not anti-Hermitian (residual {err:.2e})")

    # -- constructors ---------------------------------------------------------
    @classmethod
    def circle(cls, weights):
        if any(k != int(k) for k in weights):
            raise ValueError("circle weights must be integers")
        weights = tuple(int(k) for k in weights)
        d = len(weights)
        gen = np.diag([1j * k for k in weights])
        return cls("circle", d, weights=weights, generators=(gen,))

    @classmethod
    def torus(cls, weight_matrix):
        K = np.asarray(weight_matrix)
        if K.ndim != 2:
            raise ValueError("torus weight matrix must be 2-dimensional")
        if not np.array_equal(K, np.round(K)):
            raise ValueError("torus weights must be integers")
        K = K.astype(int)
        gens = tuple(np.diag(1j * K[l].astype(complex)) for l in range(K.shape[0]))
        return cls("torus", K.shape[1], weight_matrix=K, generators=gens)

    @classmethod
    def finite(cls, matrices):
        mats = [_check_unitary(U, "finite group element") for U in matrices]
        d = mats[0].shape[0]
        if any(U.shape != (d, d) for U in mats):
            raise ValueError("finite group elements must share one dimension")

        def index_of(U):
            for i, V in enumerate(mats):
                if np.max(np.abs(U - V)) < _UNITARY_TOL:
                    return i
            return None

        if index_of(np.eye(d)) is None:
            raise ValueError("finite group must contain the identity")
        for U in mats:
            if index_of(U.conj().T) is None:
                raise ValueError("finite group is not closed under inverse")
            for V in mats:
                if index_of(U @ V) is None:
                    raise ValueError("finite group is not closed under product")
        return cls("finite", d, elements=tuple(mats))

    @classmethod
    def su2(cls):
        gens = tuple(1j * s for s in _PAULI)
        return cls("su2", 2, generators=gens)

    # -- elements -------------------------------------------------------------
    def element(self, params):
        """Unitary matrix for the action's parameterization of a group element."""
        if self.kind == "circle":
            t = float(params)
            return np.diag(np.exp(1j * np.array(self.weights) * t))
        if self.kind == "torus":
            t = np.asarray(params, dtype=float)
            phases = self.weight_matrix.T.astype(float) @ t
            return np.diag(np.exp(1j * phases))
        if self.kind == "su2":
            alpha, beta, gamma = (float(v) for v in params)
            return _su2_euler(alpha, beta, gamma)
        if self.kind == "finite":
            return self.elements[int(params)]
        raise ValueError(f"unknown action kind {self.kind!r}")

    def random_elements(self, rng, count):
        if self.kind == "finite":
            idx = rng.integers(0, len(self.elements), size=count)
            return [self.elements[i] for i in idx]
        if self.kind == "circle":
            return [self.element(t) for t in rng.uniform(0, 2 * np.pi, size=count)]
        if self.kind == "torus":
            m = self.weight_matrix.shape[0]
            return [self.element(t) for t in rng.uniform(0, 2 * np.pi, size=(count, m))]
        if self.kind == "su2":
            out = []
            for _ in range(count):
                q = rng.normal(size=4)
                q /= np.linalg.norm(q)
                a, b, c, d_ = q
                out.append(np.array([[a + 1j * b, c + 1j * d_],
                                     [-c + 1j * d_, a - 1j * b]]))
            return out
        raise ValueError(f"unknown action kind {self.kind!r}")

    def fixed_subspace(self):
        """Orthonormal basis (2d, m) of the real fixed-point subspace.

        Kernel of the stacked realified generators for Lie kinds, of the
        stacked (U - I) for finite groups.
        """
        d = self.dimension
        if self.kind == "finite":
            blocks = [realified_matrix(U - np.eye(d)) for U in self.elements]
        else:
            blocks = [realified_matrix(A) for A in self.generators]
        if not blocks:
            return np.eye(2 * d)
        stack = np.vstack(blocks)
        _, s, vt = np.linalg.svd(stack)
        tol = max(1e-10, 1e-12 * (s[0] if s.size else 1.0))
        null_mask = np.zeros(vt.shape[0], dtype=bool)
        null_mask[s.size:] = True
        null_mask[:s.size] = s < tol
        return vt[null_mask].T

    def distance_to_fixed(self, p):
        x = realify(np.asarray(p, dtype=complex))
        basis = self.fixed_subspace()
        if basis.shape[1] == 0:
            return float(np.linalg.norm(x))
        return float(np.linalg.norm(x - basis @ (basis.T @ x)))

    def __repr__(self):
        return f"GroupAction(kind={self.kind!r}, d={self.dimension})"


def _su2_euler(alpha, beta, gamma):
    za = np.diag([np.exp(-0.5j * alpha), np.exp(0.5j * alpha)])
    zg = np.diag([np.exp(-0.5j * gamma), np.exp(0.5j * gamma)])
    c, s = np.cos(beta / 2), np.sin(beta / 2)
    y = np.array([[c, -s], [s, c]])
    return za @ y @ zg


def apply(action: GroupAction, g, p):
    """Apply a group element (matrix or action parameters) to a point."""
    p = np.asarray(p, dtype=complex).ravel()
    if isinstance(g, np.ndarray) and g.ndim == 2:
        U = g
    else:
        U = action.element(g)
    return U @ p


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes (unitary matrices) and weights summing to 1 standing in for Haar.

    ``exactness`` is the maximal net trigonometric weight (circle/torus) or
    polynomial degree in the matrix entries (su2) integrated exactly; None
    means exact for everything representable (finite groups).
    """
    nodes: tuple
    weights: np.ndarray
    exactness: int | None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        if abs(w.sum() - 1.0) > 1e-14:
            raise ValueError(f"quadrature weights sum to {w.sum()!r}, expected 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def for_circle(cls, action, n=8):
        ts = 2 * np.pi * np.arange(n) / n
        nodes = tuple(action.element(t) for t in ts)
        return cls(nodes, np.full(n, 1.0 / n), exactness=n - 1)

    @classmethod
    def for_torus(cls, action, n=8):
        m = action.weight_matrix.shape[0]
        grids = np.meshgrid(*[2 * np.pi * np.arange(n) / n] * m, indexing="ij")
        angles = np.stack([g.ravel() for g in grids], axis=-1)
        nodes = tuple(action.element(t) for t in angles)
        return cls(nodes, np.full(len(nodes), 1.0 / len(nodes)), exactness=n - 1)

    @classmethod
    def for_finite(cls, action):
        n = len(action.elements)
        return cls(tuple(action.elements), np.full(n, 1.0 / n), exactness=None)

    @classmethod
    def for_su2(cls, action, n_alpha=8, n_beta=8, n_gamma=8):
        """Euler-angle product rule: uniform alpha/gamma over the 4*pi period,
        Gauss-Legendre in cos(beta)."""
        alphas = 4 * np.pi * np.arange(n_alpha) / n_alpha
        gammas = 4 * np.pi * np.arange(n_gamma) / n_gamma
        t, glw = np.polynomial.legendre.leggauss(n_beta)
        betas = np.arccos(t)
        nodes = []
        weights = []
        for a in alphas:
            for b, wb in zip(betas, glw):
                for g in gammas:
                    nodes.append(_su2_euler(a, b, g))
                    weights.append(wb / (2 * n_alpha * n_gamma))
        exact = min(n_alpha - 1, n_gamma - 1, 2 * n_beta - 1)
        return cls(tuple(nodes), np.array(weights), exactness=exact)

    @classmethod
    def default_for(cls, action, n=8):
        if action.kind == "circle":
            return cls.for_circle(action, n)
        if action.kind == "torus":
            return cls.for_torus(action, n)
        if action.kind == "finite":
            return cls.for_finite(action)
        if action.kind == "su2":
            return cls.for_su2(action)
        raise ValueError(f"unknown action kind {action.kind!r}")


def net_circle_weight(e, weights):
    """Max |net phase weight| of the monomials of ``e``; None if exp/log present."""
    worst = 0
    for _, factors in _terms(e):
        w = 0
        for base, k in factors:
            if isinstance(base, Var):
                w += weights[base.index - 1] * k
            elif isinstance(base, ConjVar):
                w -= weights[base.index - 1] * k
            else:
                return None
        worst = max(worst, abs(w))
    return worst


def haar_average(f: PotentialField, action: GroupAction,
                 rule: QuadratureRule) -> PotentialField:
    """Quadrature average x -> sum_i w_i f(g_i x), realized symbolically.

    Each node's matrix is substituted into the expression tree and the
    weighted terms collected, so differentiation of the averaged field is
    automatically the quadrature sum of the integrand's derivatives.
    Coefficient dust below 1e-13 of the leading coefficient (phase sums
    that cancel in exact arithmetic) is chopped.
    """
    if action.kind in ("circle", "torus"):
        weights_rows = ([action.weights] if action.kind == "circle"
                        else list(action.weight_matrix))
        for row in weights_rows:
            w = net_circle_weight(f.expression, list(row))
            if w is not None and rule.exactness is not None and w > rule.exactness:
                warnings.warn(
                    f"integrand net weight {w} exceeds quadrature exactness "
                    f"{rule.exactness}; the average is not exact", stacklevel=2)
    acc = None
    for U, w in zip(rule.nodes, rule.weights):
        term = substitute_linear(f.expression, U) * w
        acc = term if acc is None else acc + term
    scale = max(1.0, max_abs_coeff(acc))
    averaged = chop(acc, tol=1e-13 * scale)
    out = PotentialField(f.dimension, averaged, domain_radius=f.domain_radius)
    out.realness = is_real_valued(out, samples=64, seed=0)
    return out


@dataclass(frozen=True)
class OrbitInfo:
    point: np.ndarray
    applied: tuple              # realified generator images A_k p
    rank: int
    fixed: bool


def orbit_dimension(action: GroupAction, p) -> OrbitInfo:
    """Real dimension of the orbit through p.

    For Lie kinds this is the rank of [A_1 p ... A_m p] over R with a
    relative threshold 1e-9 |p| (absolute floor 1e-12); finite groups have
    zero-dimensional orbits and the fixed flag compares g p with p.
    """
    p = np.asarray(p, dtype=complex).ravel()
    norm = float(np.linalg.norm(p))
    if action.kind == "finite":
        fixed = all(np.linalg.norm(U @ p - p) <= _UNITARY_TOL * max(1.0, norm)
                    for U in action.elements)
        return OrbitInfo(point=p, applied=(), rank=0, fixed=fixed)
    if not action.generators:
        raise PreconditionError("Lie action has no generators")
    cols = [realify(A @ p) for A in action.generators]
    M = np.stack(cols, axis=1)
    if norm == 0:
        return OrbitInfo(point=p, applied=tuple(cols), rank=0, fixed=True)
    s = np.linalg.svd(M, compute_uv=False)
    threshold = max(1e-9 * norm, 1e-12)
    rank = int(np.sum(s > threshold))
    return OrbitInfo(point=p, applied=tuple(cols), rank=rank, fixed=rank == 0)


@dataclass(frozen=True)
class InvarianceReport:
    max_residual: float
    witness_point: tuple | None
    witness_element: np.ndarray | None


def invariance_residual(f: PotentialField, action: GroupAction,
                        rule: QuadratureRule, n, seed) -> InvarianceReport:
    """max over sampled (p, g) of |f(g p) - f(p)|, deterministic per seed.

    Group elements are drawn at random (plus the rule nodes), so a field
    that happens to be invariant only at the quadrature lattice is caught.
    """
    if n < 1:
        raise ValueError("need at least one sample point")
    rng = substream(seed, "invariance")
    radius = f.domain_radius if f.domain_radius is not None else 2.0
    pts = sample_ball(f.dimension, radius, n, rng)
    base = f.values(pts)
    elements = list(rule.nodes) + action.random_elements(rng, 8)
    worst = 0.0
    wit_p = None
    wit_g = None
    for U in elements:
        moved = pts @ U.T
        res = np.abs(f.values(moved) - base)
        i = int(np.argmax(res))
        if res[i] > worst:
            worst = float(res[i])
            wit_p = tuple(pts[i])
            wit_g = U
    return InvarianceReport(max_residual=worst, witness_point=wit_p,
                            witness_element=wit_g)


def equivariance_check(f: PotentialField, p, angles, precondition_seed=101):
    """max over angles of |grad(e^{it} p) - e^{it} grad(p)| for diagonal weights 1.

    Requires f to be invariant under the weight-(1,...,1) circle action;
    the precondition is checked and reported, never silently skipped.
    """
    action = GroupAction.circle([1] * f.dimension)
    rule = QuadratureRule.for_circle(action, 8)
    inv = invariance_residual(f, action, rule, n=32, seed=precondition_seed)
    if inv.max_residual > 1e-8:
        raise PreconditionError(
            f"field is not circle-invariant: residual {inv.max_residual:.3e} "
            f"at {inv.witness_point}")
    p = np.asarray(p, dtype=complex).ravel()
    base = 2.0 * f.grad_dbar([p])[0]
    worst = 0.0
    for t in angles:
        phase = np.exp(1j * float(t))
        moved = 2.0 * f.grad_dbar([phase * p])[0]
        worst = max(worst, float(np.linalg.norm(moved - phase * base)))
    return worst


@dataclass(frozen=True)
class MultistartConfig:
    starts: int = 64
    box_radius: float = 1.5
    seed: int = 0
    newton_tol: float = 1e-10
    max_iter: int = 80
    cluster_radius: float = 1e-6
    psh_epsilon: float = 1e-8
    psh_samples: int = 150
    hypothesis_samples: int = 128


@dataclass(frozen=True)
class CriticalCluster:
    center: np.ndarray          # complex d-vector
    members: int
    residual: float
    distance_to_fixed: float
    fixed: bool
    orbit_rank: int


@dataclass(frozen=True)
class ConfinementReport:
    clusters: tuple
    non_converged: int
    hypothesis_met: bool
    invariance_residual: float
    psh_certificate: object
    label: str
    passed: bool


def critical_confinement_experiment(f: PotentialField, action: GroupAction,
                                    config: MultistartConfig = MultistartConfig(),
                                    rule: QuadratureRule | None = None) -> ConfinementReport:
    """Multistart search for critical points of an invariant strictly-PSH field.

    Reports every converged cluster with its distance to the fixed-point
    subspace.  The experiment claims "no counterexample found" from its
    start budget, never exhaustiveness.  Confinement is only asserted under
    the large-orbit hypothesis: every sampled point off the fixed set must
    have orbit dimension greater than n, the complex dimension.
    """
    if rule is None:
        rule = QuadratureRule.default_for(action)
    inv = invariance_residual(f, action, rule, n=32, seed=config.seed)
    if inv.max_residual > 1e-8:
        raise PreconditionError(
            f"field is not invariant under the action: residual "
            f"{inv.max_residual:.3e}")
    sampler = BallSampler(f.dimension, config.box_radius, config.psh_samples,
                          seed=config.seed + 1)
    cert = check_strict_psh(f, sampler, config.psh_epsilon)
    if not cert.passed:
        raise PreconditionError(
            f"field is not strictly plurisubharmonic on the search box: "
            f"min Levi eigenvalue {cert.min_levi_eigenvalue:.3e} at {cert.witness}")

    n_complex = f.dimension
    rng = substream(config.seed, "confine", "hypothesis")
    probe = sample_ball(f.dimension, config.box_radius, config.hypothesis_samples, rng)
    hypothesis_met = True
    for p in probe:
        info = orbit_dimension(action, p)
        if 0 < info.rank <= n_complex:
            hypothesis_met = False
            break

    start_rng = substream(config.seed, "confine", "starts")
    starts = [realify(p) for p in
              sample_ball(f.dimension, config.box_radius, config.starts, start_rng)]

    def grad_real(x):
        return realify(2.0 * f.grad_dbar([unrealify(x)])[0])

    def hess_real(x):
        return real_hessian_matrices(f, [unrealify(x)])[0]

    raw_clusters, failures = multistart(
        grad_real, hess_real, starts, tol=config.newton_tol,
        max_iter=config.max_iter, cluster_radius=config.cluster_radius,
        max_step=config.box_radius)

    clusters = []
    for c in raw_clusters:
        center = unrealify(c.center)
        dist = action.distance_to_fixed(center)
        info = orbit_dimension(action, center)
        clusters.append(CriticalCluster(
            center=center, members=c.members, residual=c.residual,
            distance_to_fixed=dist, fixed=dist < config.cluster_radius,
            orbit_rank=info.rank))

    if not hypothesis_met:
        label = ("hypothesis not met: some orbit off the fixed set has real "
                 f"dimension <= {n_complex}; confinement not asserted")
        passed = False
    else:
        confined = bool(clusters) and all(c.fixed for c in clusters)
        label = ("no counterexample found: all "
                 f"{len(clusters)} critical cluster(s) lie in the fixed-point set"
                 if confined else
                 "counterexample candidate: a critical cluster lies off the "
                 "fixed-point set")
        passed = confined
    return ConfinementReport(
        clusters=tuple(clusters), non_converged=len(failures),
        hypothesis_met=hypothesis_met, invariance_residual=inv.max_residual,
        psh_certificate=cert, label=label, passed=passed)
