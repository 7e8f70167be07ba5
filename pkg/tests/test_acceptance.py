"""Acceptance criteria: one test per criterion, at the stated tolerances.

Each test prints a single pass/fail line (run with -s to stream them).
The default corpus covers the round and quartic potentials on C^2, the
cross-term potential, the SU(2)-averaged perturbed fields, and the 1-D
quadratic/quartic wells.
"""

import math
import time

import numpy as np
import pytest

from pshlab import corpus
from pshlab.config import validate_config
from pshlab.expr import evaluate, sample_ball
from pshlab.flow import FlowConfig, estimate_lojasiewicz, integrate_flow
from pshlab.geometry import BallSampler, check_strict_psh
from pshlab.moment import MomentMapField, degree_certificate_for_level, \
    gradient_fiber, homotopy_positivity
from pshlab.rootfind import substream
from pshlab.runner import run as run_experiment
from pshlab.symmetry import GroupAction, MultistartConfig, QuadratureRule, \
    critical_confinement_experiment, haar_average, invariance_residual, \
    orbit_dimension
from pshlab.verify import _fd_wirtinger


def _report(num, description, ok):
    print(f"[acceptance] criterion {num:2d} ({description}): "
          f"{'PASS' if ok else 'FAIL'}")
    assert ok, f"acceptance criterion {num} failed: {description}"


@pytest.fixture(scope="module")
def fields():
    return corpus.all_fields()


@pytest.fixture(scope="module")
def moment_fields(fields):
    return {name: MomentMapField(fields[name], seed=1)
            for name in corpus.moment_field_names()}


def test_criterion_01_differentiation_oracle(fields):
    worst = 0.0
    for name, f in fields.items():
        pts = sample_ball(f.dimension, 1.5, 100, substream(1, "acc1", name))
        for j in range(1, f.dimension + 1):
            de = f.dbar(j)
            for p in pts:
                exact = evaluate(de, p)
                approx = _fd_wirtinger(f.expression, p, j, True)
                worst = max(worst, abs(exact - approx) / max(1.0, abs(exact)))
    _report(1, "Wirtinger gradients match central finite differences",
            worst < 1e-6)


def test_criterion_02_strict_psh_certification(fields):
    ok = True
    for name in corpus.unit_levi_field_names():
        f = fields[name]
        cert = check_strict_psh(f, BallSampler(f.dimension, 1.0, 300, seed=11),
                                epsilon=1e-8)
        ok &= cert.passed and cert.min_levi_eigenvalue >= 1 - 1e-9
    cross = check_strict_psh(fields["cross2"], BallSampler(2, 1.0, 300, seed=11),
                             epsilon=0.5)
    ok &= cross.passed and cross.min_levi_eigenvalue >= 0.75 - 1e-9
    planted = check_strict_psh(corpus.saddle_field(),
                               BallSampler(1, 1.0, 100, seed=11), epsilon=0.1)
    ok &= (not planted.passed) and planted.witness is not None
    _report(2, "strict-PSH certificates, unit Levi bound, planted failure", ok)


def test_criterion_03_radial_positivity(fields):
    violations = 0
    for name in corpus.psh_field_names():
        f = fields[name]
        pts = sample_ball(f.dimension, 2.0, 1000, substream(1, "acc3", name))
        g = 2.0 * f.grad_dbar(pts)
        inner = np.real(np.sum(g * np.conj(pts), axis=1))
        nonzero = np.linalg.norm(pts, axis=1) > 1e-12
        violations += int(np.sum(inner[nonzero] <= 0))
    _report(3, "radial positivity <grad phi(a), a> > 0 at 10^3 samples/field",
            violations == 0)


def test_criterion_04_degree_one_theorem(moment_fields):
    ok = True
    for name, m in moment_fields.items():
        start = time.perf_counter()
        for b in (0.5, 1.0, 2.0):
            cert = degree_certificate_for_level(m, b, seed=4)
            ok &= cert.degree == 1 and cert.cross_check_degree == 1 and cert.passed
        elapsed = time.perf_counter() - start
        ok &= elapsed < 60.0
    _report(4, "degree 1 by both methods at b in {0.5, 1, 2}, < 60 s/field", ok)


def test_criterion_05_homotopy_certificate(moment_fields):
    ok = True
    for m in moment_fields.values():
        for b in (0.5, 1.0, 2.0):
            cert = homotopy_positivity(m, b, 1000, 11, seed=5)
            ok &= cert.passed and cert.min_value > 0
    _report(5, "homotopy (1-s)<grad phi, a> + s|a|^2 positive on 10^3 x 11 grids",
            ok)


def test_criterion_06_fiber_finiteness(fields):
    ok = True
    for name in ("round2", "quartic2", "cross2", "avg_linear", "avg_quartic"):
        f = fields[name]
        rng = substream(1, "acc6", name)
        for k in range(10):
            c = rng.normal(size=2) + 1j * rng.normal(size=2)
            report = gradient_fiber(f, c, starts=48, seed=600 + k)
            ok &= all(cl.isolated for cl in report.clusters)
    _report(6, "all fiber clusters isolated under the perturbation probe "
               "(10 targets/field)", ok)


def test_criterion_07_flow_convergence(fields):
    traj = integrate_flow(fields["well2"], (3.0,), FlowConfig())
    ok = traj.termination == "gradient-stop"
    ok &= abs(traj.arc_length - 3.0) < 1e-4
    closed_form = 3.0 * math.exp(-2.0 * traj.final.t)
    ok &= abs(traj.final.point[0] - closed_form) < 1e-6
    for name, f, x0, metric in (("well2", fields["well2"], (3.0,), "euclidean"),
                                ("well4", fields["well4"], (3.0,), "euclidean"),
                                ("round2", fields["round2"], (1.0, 1.0j), "euclidean"),
                                ("quartic2", fields["quartic2"], (0.8, 0.5), "kahler")):
        t = integrate_flow(f, x0, FlowConfig(metric=metric))
        for idx, mag in t.monotonicity_violations:
            ok &= mag <= t.energy_tolerances[idx]
    _report(7, "gradient-stop with arc length 3 +- 1e-4, terminal point 1e-6, "
               "monotonicity bounded", ok)


def test_criterion_08_lojasiewicz_bands(fields):
    quad = estimate_lojasiewicz(integrate_flow(fields["well2"], (3.0,), FlowConfig()))
    quart = estimate_lojasiewicz(integrate_flow(fields["well4"], (3.0,), FlowConfig()))
    ok = 0.45 <= quad.alpha <= 0.55 and 0.70 <= quart.alpha <= 0.80
    _report(8, f"Lojasiewicz exponents {quad.alpha:.3f} in [0.45, 0.55] and "
               f"{quart.alpha:.3f} in [0.70, 0.80]", ok)


def test_criterion_09_critical_confinement(fields):
    su2 = GroupAction.su2()
    ok = True
    for name in ("avg_linear", "avg_quartic"):
        report = critical_confinement_experiment(
            fields[name], su2, MultistartConfig(starts=64, seed=9))
        ok &= report.passed and len(report.clusters) == 1
        ok &= float(np.linalg.norm(report.clusters[0].center)) < 1e-6
        ok &= report.clusters[0].fixed
    _report(9, "64-start search finds exactly one critical cluster at the "
               "origin for SU(2)-averaged fields", ok)


def test_criterion_10_haar_averaging(fields):
    from pshlab.expr import PotentialField, parse_expression
    action = GroupAction.circle([1])
    rule = QuadratureRule.for_circle(action, 8)
    pts = sample_ball(1, 1.5, 25, substream(1, "acc10"))
    worst_exact = 0.0
    for a in range(4):
        for b in range(4):
            f = PotentialField(1, parse_expression("z1", 1) ** a
                               * parse_expression("cj(z1)", 1) ** b)
            avg = haar_average(f, action, rule)
            expected = f.values_complex(pts) if a == b else np.zeros(len(pts))
            worst_exact = max(worst_exact,
                              float(np.max(np.abs(avg.values_complex(pts)
                                                  - expected))))
    su2 = GroupAction.su2()
    su2_rule = QuadratureRule.for_su2(su2)
    once = haar_average(fields["quartic2"], su2, su2_rule)
    twice = haar_average(once, su2, su2_rule)
    pts2 = sample_ball(2, 1.5, 50, substream(1, "acc10b"))
    idem = float(np.max(np.abs(twice.values(pts2) - once.values(pts2))))
    inv = invariance_residual(once, su2, su2_rule, n=50, seed=10).max_residual
    ok = worst_exact < 1e-12 and idem < 1e-10 and inv < 1e-10
    _report(10, f"circle exactness {worst_exact:.1e}, idempotence {idem:.1e}, "
                f"invariance {inv:.1e}", ok)


def test_criterion_11_orbit_dimensions():
    su2 = GroupAction.su2()
    circle11 = GroupAction.circle([1, 1])
    pts = sample_ball(2, 2.0, 300, substream(1, "acc11"))
    ok = orbit_dimension(su2, (0, 0)).rank == 0
    for p in pts:
        if np.linalg.norm(p) > 1e-12:
            ok &= orbit_dimension(su2, p).rank == 3
            ok &= orbit_dimension(circle11, p).rank == 1
    _report(11, "SU(2) orbit rank 3 off the origin and 0 at it (the origin is "
                "the guaranteed small orbit); circle(1,1) rank 1", ok)


def test_criterion_12_determinism(tmp_path):
    outputs = []
    for run_idx in (0, 1):
        out = tmp_path / f"v{run_idx}"
        cfg = validate_config({"kind": "verify", "seed": 1, "output": str(out)},
                              source_text="determinism check")
        report = run_experiment(cfg)
        assert report.passed
        outputs.append(out)
    csv_same = (outputs[0] / "summary.csv").read_bytes() == \
        (outputs[1] / "summary.csv").read_bytes()
    jsonl_same = (outputs[0] / "checks.jsonl").read_bytes() == \
        (outputs[1] / "checks.jsonl").read_bytes()
    _report(12, "two verify --seed 1 runs give byte-identical CSV/JSONL",
            csv_same and jsonl_same)
