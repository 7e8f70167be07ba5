"""Invariant verification suite over the built-in corpus.

Every module's documented invariants run as named checks with measured
margins; the suite is fully seeded, so identical seeds give identical
results (and byte-identical artifacts downstream).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import corpus
from .expr import (
    PotentialField, evaluate, parse_expression, sample_ball, to_string,
    wirtinger_diff, conj_expr,
)
from .flow import FlowConfig, convergence_report, estimate_lojasiewicz, integrate_flow
from .geometry import (
    BallSampler, check_strict_psh, complex_gradient, jmul,
    levi_hessian_identity_residual, real_inner, realify, unrealify,
)
from .moment import (
    MomentMapField, chordal_distance, degree_certificate_for_level,
    gradient_fiber, induced_map,
)
from .rootfind import substream
from .symmetry import (
    GroupAction, MultistartConfig, QuadratureRule,
    critical_confinement_experiment, haar_average, invariance_residual,
    orbit_dimension,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    comparator: str          # "<", ">", "=="
    passed: bool
    detail: str = ""

    @classmethod
    def less(cls, name, value, threshold, detail=""):
        return cls(name, float(value), float(threshold), "<",
                   bool(value < threshold), detail)

    @classmethod
    def greater(cls, name, value, threshold, detail=""):
        return cls(name, float(value), float(threshold), ">",
                   bool(value > threshold), detail)

    @classmethod
    def equals(cls, name, value, expected, detail=""):
        return cls(name, float(value), float(expected), "==",
                   bool(value == expected), detail)


def _fd_wirtinger(e, p, j, conjugate, h=1e-5):
    p = [complex(c) for c in p]

    def at(delta):
        q = list(p)
        q[j - 1] += delta
        return evaluate(e, q)

    dx = (at(h) - at(-h)) / (2 * h)
    dy = (at(1j * h) - at(-1j * h)) / (2 * h)
    return 0.5 * (dx + 1j * dy) if conjugate else 0.5 * (dx - 1j * dy)


def _fd_real_gradient(f, p, h=1e-5):
    x = realify(p)
    out = np.empty(x.size)
    for m in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[m] += h
        xm[m] -= h
        out[m] = f.value(unrealify(xp)) - f.value(unrealify(xm))
    return out / (2 * h)


# --------------------------------------------------------------------------
# expr_core checks
# --------------------------------------------------------------------------

def _check_wirtinger_fd(fields, seed):
    worst = 0.0
    for name, f in fields.items():
        pts = sample_ball(f.dimension, 1.5, 100, substream(seed, "wfd", name))
        for j in range(1, f.dimension + 1):
            de = f.dbar(j)
            for p in pts:
                exact = evaluate(de, p)
                approx = _fd_wirtinger(f.expression, p, j, True)
                worst = max(worst, abs(exact - approx) / max(1.0, abs(exact)))
    return [CheckResult.less("expr.wirtinger-vs-finite-difference", worst, 1e-6,
                             "100 seeded points per corpus field")]


def _check_conj_swap(fields, seed):
    worst = 0.0
    for name, f in fields.items():
        pts = sample_ball(f.dimension, 1.5, 50, substream(seed, "conj", name))
        for j in range(1, f.dimension + 1):
            lhs = wirtinger_diff(conj_expr(f.expression), j, conjugate=False)
            rhs = conj_expr(f.dbar(j))
            for p in pts:
                worst = max(worst, abs(evaluate(lhs, p) - evaluate(rhs, p)))
    return [CheckResult.less("expr.conjugate-swap-identity", worst, 1e-10,
                             "50 points per field")]


def _check_print_roundtrip(fields):
    failures = 0
    for f in fields.values():
        if parse_expression(to_string(f.expression), f.dimension) != f.expression:
            failures += 1
    return [CheckResult.equals("expr.parse-print-roundtrip", failures, 0,
                               "structural equality on all corpus ASTs")]


# --------------------------------------------------------------------------
# geometry checks
# --------------------------------------------------------------------------

def _check_hermiticity(fields, seed):
    worst = 0.0
    for name, f in fields.items():
        pts = sample_ball(f.dimension, 1.5, 40, substream(seed, "herm", name))
        H = f.levi_matrices(pts)
        worst = max(worst, float(np.max(np.abs(H - np.conj(np.swapaxes(H, 1, 2))))))
    return [CheckResult.less("geometry.levi-hermiticity", worst, 1e-10)]


def _check_gradient_consistency(fields, seed):
    worst = 0.0
    for name, f in fields.items():
        pts = sample_ball(f.dimension, 1.5, 100, substream(seed, "gradfd", name))
        for p in pts:
            exact = complex_gradient(f, p).real_gradient
            approx = _fd_real_gradient(f, p)
            worst = max(worst, float(np.linalg.norm(exact - approx))
                        / max(1.0, float(np.linalg.norm(exact))))
    return [CheckResult.less("geometry.gradient-vs-finite-difference", worst, 1e-6,
                             "100 seeded points per field")]


def _check_radial_positivity(fields, seed):
    violations = 0
    checked = 0
    for name in corpus.psh_field_names():
        f = fields[name]
        pts = sample_ball(f.dimension, 2.0, 1000, substream(seed, "radial", name))
        g = 2.0 * f.grad_dbar(pts)
        inner = np.real(np.sum(g * np.conj(pts), axis=1))
        nonzero = np.linalg.norm(pts, axis=1) > 1e-12
        violations += int(np.sum(inner[nonzero] <= 0))
        checked += int(np.sum(nonzero))
    return [CheckResult.equals("geometry.radial-positivity-violations",
                               violations, 0, f"{checked} nonzero samples")]


def _check_levi_hessian_identity(fields, seed):
    worst = 0.0
    for name, f in fields.items():
        rng = substream(seed, "levihess", name)
        pts = sample_ball(f.dimension, 1.5, 20, rng)
        for p in pts:
            v = rng.normal(size=f.dimension) + 1j * rng.normal(size=f.dimension)
            worst = max(worst, levi_hessian_identity_residual(f, p, v))
    return [CheckResult.less("geometry.levi-hessian-quarter-identity", worst, 1e-9)]


def _check_j_compatibility(seed):
    rng = substream(seed, "jcompat")
    worst_orth = 0.0
    worst_iso = 0.0
    for _ in range(100):
        v = rng.normal(size=3) + 1j * rng.normal(size=3)
        w = rng.normal(size=3) + 1j * rng.normal(size=3)
        worst_orth = max(worst_orth,
                         abs(real_inner(jmul(v), v)) / np.linalg.norm(v) ** 2)
        worst_iso = max(worst_iso,
                        abs(real_inner(jmul(v), jmul(w)) - real_inner(v, w)))
    return [CheckResult.less("geometry.j-orthogonality", worst_orth, 1e-12),
            CheckResult.less("geometry.j-isometry", worst_iso, 1e-12)]


def _check_psh_certificates(fields, seed):
    results = []
    for name in corpus.psh_field_names():
        f = fields[name]
        radius = 1.0 if f.dimension == 2 else 1.0
        cert = check_strict_psh(f, BallSampler(f.dimension, radius, 300,
                                               seed=seed + 17), epsilon=1e-8)
        expected = corpus.MIN_LEVI.get(name)
        results.append(CheckResult(
            f"geometry.strict-psh.{name}", cert.min_levi_eigenvalue,
            (expected - 1e-9) if expected is not None else 1e-8, ">",
            cert.passed and (expected is None
                             or cert.min_levi_eigenvalue >= expected - 1e-9),
            f"unit 4-ball, 300 samples"))
    saddle = corpus.saddle_field()
    cert = check_strict_psh(saddle, BallSampler(1, 1.0, 100, seed=seed + 18),
                            epsilon=0.1)
    results.append(CheckResult(
        "geometry.strict-psh.planted-saddle-fails",
        0.0 if (not cert.passed and cert.witness is not None) else 1.0, 0.0, "==",
        not cert.passed and cert.witness is not None,
        f"min eigenvalue {cert.min_levi_eigenvalue:.3e}"))
    return results


# --------------------------------------------------------------------------
# symmetry checks
# --------------------------------------------------------------------------

def _check_circle_exactness(seed):
    # monomials z^a cj(z)^b with net weight |a - b| <= 3 < 8 nodes: the node
    # average must equal the Haar integral (the diagonal a == b survives)
    action = GroupAction.circle([1])
    rule = QuadratureRule.for_circle(action, 8)
    pts = sample_ball(1, 1.5, 25, substream(seed, "exactness"))
    worst = 0.0
    for a in range(4):
        for b in range(4):
            f = PotentialField(1, parse_expression("z1", 1) ** a
                               * parse_expression("cj(z1)", 1) ** b)
            avg = haar_average(f, action, rule)
            expected = f.values_complex(pts) if a == b else np.zeros(len(pts))
            worst = max(worst, float(np.max(np.abs(avg.values_complex(pts)
                                                   - expected))))
    return [CheckResult.less("symmetry.circle-exactness", worst, 1e-12,
                             "net weights -3..3 against 8 nodes")]


def _check_averaging(fields, seed):
    su2 = GroupAction.su2()
    rule = QuadratureRule.for_su2(su2)
    f = fields["quartic2"]
    once = haar_average(f, su2, rule)
    twice = haar_average(once, su2, rule)
    pts = sample_ball(2, 1.5, 50, substream(seed, "idem"))
    idem = float(np.max(np.abs(twice.values(pts) - once.values(pts))))
    inv = invariance_residual(once, su2, rule, n=50, seed=seed + 3)
    return [CheckResult.less("symmetry.averaging-idempotence", idem, 1e-10),
            CheckResult.less("symmetry.averaged-field-invariance",
                             inv.max_residual, 1e-10)]


def _check_orbit_dimensions(seed):
    su2 = GroupAction.su2()
    circle11 = GroupAction.circle([1, 1])
    rng = substream(seed, "orbits")
    pts = sample_ball(2, 2.0, 200, rng)
    bad = 0
    for p in pts:
        if np.linalg.norm(p) > 1e-12:
            if orbit_dimension(su2, p).rank != 3:
                bad += 1
            if orbit_dimension(circle11, p).rank != 1:
                bad += 1
    origin_rank = orbit_dimension(su2, (0, 0)).rank
    results = [
        CheckResult.equals("symmetry.orbit-ranks-off-origin", bad, 0,
                           "su2 rank 3, circle(1,1) rank 1 at 200 samples"),
        CheckResult.equals("symmetry.orbit-rank-at-origin", origin_rank, 0),
    ]
    # small-orbit existence: the origin witnesses rank <= n for every action
    for name, action in corpus.actions().items():
        d = action.dimension
        rank0 = orbit_dimension(action, np.zeros(d)).rank
        results.append(CheckResult.equals(
            f"symmetry.small-orbit-witness.{name}", rank0, 0,
            f"origin rank {rank0} <= n = {d}"))
    return results


def _check_norm_invariance(seed):
    rng = substream(seed, "unitary")
    worst = 0.0
    for action in corpus.actions().values():
        pts = sample_ball(action.dimension, 2.0, 20, rng)
        for U in action.random_elements(rng, 10):
            for p in pts:
                worst = max(worst, abs(np.linalg.norm(U @ p) - np.linalg.norm(p)))
    return [CheckResult.less("symmetry.unitary-norm-invariance", worst, 1e-12)]


def _check_confinement(fields, seed):
    su2 = GroupAction.su2()
    results = []
    for name in ("avg_linear", "avg_quartic"):
        report = critical_confinement_experiment(
            fields[name], su2, MultistartConfig(starts=64, seed=seed + 29))
        dist = (max(c.distance_to_fixed for c in report.clusters)
                if report.clusters else math.inf)
        results.append(CheckResult(
            f"symmetry.critical-confinement.{name}", dist, 1e-6, "<",
            report.passed and len(report.clusters) == 1,
            f"{len(report.clusters)} cluster(s), {report.non_converged} "
            f"non-converged; {report.label}"))
    return results


# --------------------------------------------------------------------------
# flow checks
# --------------------------------------------------------------------------

def _flow_corpus(fields):
    return [
        ("well2", fields["well2"], (3.0,), "euclidean"),
        ("well4", fields["well4"], (3.0,), "euclidean"),
        ("round2", fields["round2"], (1.0, 1.0j), "euclidean"),
        ("quartic2", fields["quartic2"], (0.8, 0.5), "kahler"),
    ]


def _check_flow_invariants(fields, seed):
    results = []
    worst_energy = 0.0
    worst_mono = 0.0
    mono_ok = True
    for name, f, x0, metric in _flow_corpus(fields):
        traj = integrate_flow(f, x0, FlowConfig(metric=metric))
        for res, tol in zip(traj.energy_residuals, traj.energy_tolerances):
            worst_energy = max(worst_energy, res / tol)
        for idx, mag in traj.monotonicity_violations:
            worst_mono = max(worst_mono, mag)
            if mag > traj.energy_tolerances[idx]:
                mono_ok = False
        rep = convergence_report(traj, f)
        results.append(CheckResult(
            f"flow.convergence.{name}", rep.final_grad_norm, 1e-8, "<",
            rep.passed, f"termination {rep.termination}, arc {rep.arc_length:.6f}"))
    results.insert(0, CheckResult.less(
        "flow.energy-identity-ratio", worst_energy, 1.0,
        "per-step |du + int |grad|^2 dt| over 10x local tolerance"))
    results.insert(1, CheckResult(
        "flow.monotonicity-within-tolerance", worst_mono, 0.0, "<",
        mono_ok, "worst u increase over accepted steps"))
    return results


def _check_flow_closed_form(fields):
    traj = integrate_flow(fields["well2"], (3.0,), FlowConfig())
    arc_err = abs(traj.arc_length - 3.0)
    worst_pt = max(abs(s.point[0] - 3.0 * math.exp(-2.0 * s.t))
                   for s in traj.accepted)
    return [CheckResult.less("flow.quadratic-arc-length-error", arc_err, 1e-4),
            CheckResult.less("flow.quadratic-pointwise-error", worst_pt, 1e-6)]


def _check_metric_equivalence(fields):
    f = fields["round2"]
    te = integrate_flow(f, (1.0, 0.5j), FlowConfig(metric="euclidean"))
    tk = integrate_flow(f, (1.0, 0.5j), FlowConfig(metric="kahler"))
    worst = max(float(np.linalg.norm(a.point - b.point))
                for a, b in zip(te.accepted, tk.accepted))
    return [CheckResult.less("flow.metric-equivalence-flat", worst, 1e-8)]


def _check_step_halving(fields):
    coarse = integrate_flow(fields["well2"], (3.0,), FlowConfig(rtol=1e-6, atol=1e-8))
    fine = integrate_flow(fields["well2"], (3.0,), FlowConfig(rtol=5e-7, atol=5e-9))
    delta = abs(coarse.final.point[0] - fine.final.point[0])
    return [CheckResult.less("flow.tolerance-halving-consistency", delta, 1e-6)]


def _check_lojasiewicz(fields):
    results = []
    for name, lo, hi in (("well2", 0.45, 0.55), ("well4", 0.70, 0.80)):
        traj = integrate_flow(fields[name], (3.0,), FlowConfig())
        est = estimate_lojasiewicz(traj)
        results.append(CheckResult(
            f"flow.lojasiewicz-exponent.{name}", est.alpha, lo, ">",
            lo <= est.alpha <= hi,
            f"band [{lo}, {hi}], C = {est.constant:.4f}, "
            f"fit residual {est.residual:.2e}"))
    return results


# --------------------------------------------------------------------------
# moment checks
# --------------------------------------------------------------------------

def _check_moment_invariance(moment_fields, seed):
    worst = 0.0
    for name, m in moment_fields.items():
        rng = substream(seed, "mominv", name)
        pts = sample_ball(2, 2.0, 100, rng)
        ts = rng.uniform(0, 2 * np.pi, 100)
        base = m.mu_values(pts)
        moved = m.mu_values(pts * np.exp(1j * ts)[:, None])
        worst = max(worst, float(np.max(np.abs(moved - base))))
    return [CheckResult.less("moment.mu-circle-invariance", worst, 1e-12,
                             "100 sampled (p, t) per field")]


def _check_hamiltonian(moment_fields):
    worst = max(m.hamiltonian_residual for m in moment_fields.values())
    return [CheckResult.less("moment.hamiltonian-oracle", worst, 1e-6,
                             "pinned closed form against the Levi 2-form")]


def _check_quotient_well_defined(moment_fields, seed):
    worst = 0.0
    for name, m in moment_fields.items():
        from .moment import sample_level_set
        sample = sample_level_set(m, 1.0, 20, seed=seed + 5)
        rng = substream(seed, "quot", name)
        for p in sample.points:
            t = rng.uniform(0, 2 * np.pi)
            worst = max(worst, chordal_distance(
                induced_map(m, p), induced_map(m, np.exp(1j * t) * p)))
    return [CheckResult.less("moment.quotient-well-definedness", worst, 1e-10)]


def _check_degree(moment_fields, seed, levels=(0.5, 1.0, 2.0)):
    results = []
    for name, m in moment_fields.items():
        for b in levels:
            cert = degree_certificate_for_level(m, b, seed=seed + 7)
            results.append(CheckResult(
                f"moment.degree-one.{name}.b={b}", cert.degree, 1, "==",
                cert.passed and cert.degree == 1,
                f"preimage counts {cert.per_target_counts}, area integral "
                f"{cert.area_integral:.4f}, homotopy min > 0: {cert.homotopy_passed}"))
    return results


def _check_fibers(fields, seed, n_targets=10):
    results = []
    for name in ("round2", "quartic2", "cross2", "avg_linear", "avg_quartic"):
        f = fields[name]
        rng = substream(seed, "fibertargets", name)
        worst_spread = 0.0
        all_isolated = True
        for k in range(n_targets):
            c = rng.normal(size=2) + 1j * rng.normal(size=2)
            report = gradient_fiber(f, c, starts=48, seed=seed + 100 + k)
            for cl in report.clusters:
                worst_spread = max(worst_spread, cl.probe_spread)
                all_isolated &= cl.isolated
        results.append(CheckResult(
            f"moment.fiber-isolation.{name}", worst_spread, 1e-5, "<",
            all_isolated, f"{n_targets} random targets, perturbation 1e-4"))
    return results


# --------------------------------------------------------------------------
# the suite
# --------------------------------------------------------------------------

def verify_suite(fields=None, seed=1, degree_levels=(0.5, 1.0, 2.0),
                 fiber_targets=10):
    """Run every documented invariant against the corpus; returns CheckResults.

    An explicitly empty corpus yields a single failing "vacuous" marker.
    """
    if fields is not None and len(fields) == 0:
        return [CheckResult("suite.vacuous", 0.0, 1.0, ">", False,
                            "empty corpus: zero checks executed")]
    if fields is None:
        fields = corpus.all_fields()
    results = []
    results += _check_wirtinger_fd(fields, seed)
    results += _check_conj_swap(fields, seed)
    results += _check_print_roundtrip(fields)
    results += _check_hermiticity(fields, seed)
    results += _check_gradient_consistency(fields, seed)
    results += _check_radial_positivity(fields, seed)
    results += _check_levi_hessian_identity(fields, seed)
    results += _check_j_compatibility(seed)
    results += _check_psh_certificates(fields, seed)
    results += _check_circle_exactness(seed)
    results += _check_averaging(fields, seed)
    results += _check_orbit_dimensions(seed)
    results += _check_norm_invariance(seed)
    results += _check_confinement(fields, seed)
    results += _check_flow_invariants(fields, seed)
    results += _check_flow_closed_form(fields)
    results += _check_metric_equivalence(fields)
    results += _check_step_halving(fields)
    results += _check_lojasiewicz(fields)
    moment_fields = {name: MomentMapField(fields[name], seed=seed)
                     for name in corpus.moment_field_names()}
    results += _check_moment_invariance(moment_fields, seed)
    results += _check_hamiltonian(moment_fields)
    results += _check_quotient_well_defined(moment_fields, seed)
    results += _check_degree(moment_fields, seed, levels=degree_levels)
    results += _check_fibers(fields, seed, n_targets=fiber_targets)
    return results
