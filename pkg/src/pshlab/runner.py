"""Experiment dispatch: build the objects a config names, run, emit artifacts."""

from __future__ import annotations

import os
import time

import numpy as np

from .config import ExperimentConfig, build_action, parse_point
from .expr import PotentialField, sample_ball, to_string
from .flow import FlowConfig, convergence_report, estimate_lojasiewicz, \
    InsufficientTailError, integrate_flow, trajectory_jsonl_lines
from .geometry import BallSampler, check_strict_psh
from .moment import MomentMapField, degree_certificate_for_level, gradient_fiber, \
    sample_level_set
from .report import RunReport, fmt, report_txt, results_jsonl_text, rows_csv_text, \
    summary_csv_text
from .rootfind import substream
from .svgplot import line_plot, scatter_plot
from .symmetry import MultistartConfig, QuadratureRule, \
    critical_confinement_experiment, haar_average, invariance_residual, \
    orbit_dimension
from .verify import CheckResult, verify_suite


class _Out:
    def __init__(self, directory):
        self.directory = directory
        self.names = []
        os.makedirs(directory, exist_ok=True)

    def write(self, name, text):
        with open(os.path.join(self.directory, name), "w", encoding="utf-8") as fh:
            fh.write(text)
        self.names.append(name)


def _field_from(cfg: ExperimentConfig):
    return PotentialField.from_text(
        cfg.field_expression, cfg.field_dimension,
        domain_radius=cfg.field_domain_radius, seed=cfg.seed)


def _run_check_psh(cfg, out):
    f = _field_from(cfg)
    p = cfg.params
    sampler = BallSampler(f.dimension, float(p.get("radius", 1.0)),
                          int(p.get("samples", 300)), seed=cfg.seed)
    cert = check_strict_psh(f, sampler, float(p.get("epsilon", 1e-8)))
    detail = f"witness {cert.witness}" if cert.witness else \
        f"{cert.sample_count} samples on radius {cert.domain_radius}"
    out.write("psh.csv", rows_csv_text(
        ["radius", "samples", "epsilon", "min_levi_eigenvalue", "passed"],
        [[cert.domain_radius, cert.sample_count, cert.epsilon,
          cert.min_levi_eigenvalue, cert.passed]]))
    return [CheckResult("check-psh.min-levi-eigenvalue", cert.min_levi_eigenvalue,
                        cert.epsilon, ">", cert.passed, detail)]


def _run_flow(cfg, out):
    f = _field_from(cfg)
    p = cfg.params
    flow_cfg = FlowConfig(
        metric=p.get("metric", "euclidean"),
        initial_step=float(p.get("initial_step", 0.01)),
        rtol=float(p.get("rtol", 1e-8)), atol=float(p.get("atol", 1e-10)),
        grad_stop=float(p.get("grad_stop", 1e-8)),
        max_time=float(p.get("max_time", 1e6)),
        max_steps=int(p.get("max_steps", 100_000)))
    results = []
    for run_idx, entries in enumerate(p["x0"] if isinstance(p["x0"][0], list)
                                      and isinstance(p["x0"][0][0], list)
                                      else [p["x0"]]):
        x0 = parse_point(entries)
        traj = integrate_flow(f, x0, flow_cfg)
        rep = convergence_report(traj, f)
        tag = "" if run_idx == 0 else f"_{run_idx}"
        out.write(f"trajectory{tag}.jsonl",
                  "\n".join(trajectory_jsonl_lines(traj)) + "\n")
        acc = traj.accepted
        ts = [s.t for s in acc]
        us = [s.u for s in acc]
        gs = [s.grad_norm for s in acc]
        out.write(f"flow_u{tag}.svg", line_plot(
            [(ts, us, "u(x(t))")], xlabel="t", ylabel="u",
            title=f"objective along the flow (run {run_idx})",
            logy=all(v > 0 for v in us)))
        out.write(f"flow_grad{tag}.svg", line_plot(
            [(ts, gs, "|grad u|")], xlabel="t", ylabel="|grad u|",
            title=f"gradient norm along the flow (run {run_idx})",
            logy=all(v > 0 for v in gs)))
        results.append(CheckResult(
            f"flow.converged.run{run_idx}", rep.final_grad_norm,
            flow_cfg.grad_stop, "<", rep.passed,
            f"termination {rep.termination}, arc length {fmt(rep.arc_length)}, "
            f"{rep.violation_count} monotonicity violation(s)"))
        try:
            est = estimate_lojasiewicz(traj)
            i0, i1 = est.window
            tail = acc[i0:i1 + 1]
            xs = [s.u - est.u_limit for s in tail if s.u > est.u_limit]
            ys = [s.grad_norm for s in tail if s.u > est.u_limit]
            fit = [est.constant ** -1 * x ** est.alpha for x in xs]
            out.write(f"lojasiewicz{tag}.svg", line_plot(
                [(xs, ys, "data"), (xs, fit, "fit")],
                xlabel="u - u_inf", ylabel="|grad u|",
                title=f"decay-exponent fit: alpha = {est.alpha:.3f}",
                logx=True, logy=True))
            results.append(CheckResult(
                f"flow.lojasiewicz-exponent.run{run_idx}", est.alpha, 0.0, ">",
                0 < est.alpha < 1,
                f"C = {fmt(est.constant)}, residual {fmt(est.residual)}"))
        except InsufficientTailError:
            pass
    return results


def _run_degree(cfg, out):
    f = _field_from(cfg)
    p = cfg.params
    m = MomentMapField(f, radius=cfg.field_domain_radius or 2.5, seed=cfg.seed)
    results = []
    rows = []
    for b in p.get("levels", [1.0]):
        cert = degree_certificate_for_level(
            m, float(b), seed=cfg.seed, method=p.get("method", "preimage"),
            n_targets=int(p.get("targets", 5)),
            subdivisions=int(p.get("subdivisions", 3)))
        rows.append([b, cert.degree, cert.cross_check_degree,
                     cert.area_integral, cert.homotopy_passed, cert.passed])
        sample = sample_level_set(m, float(b), 200, seed=cfg.seed)
        out.write(f"levelset_b{b}.csv", rows_csv_text(
            ["re_z1", "im_z1", "re_z2", "im_z2"],
            [[pt[0].real, pt[0].imag, pt[1].real, pt[1].imag]
             for pt in sample.points]))
        out.write(f"levelset_b{b}.svg", scatter_plot(
            [([pt[0].real for pt in sample.points],
              [pt[0].imag for pt in sample.points], "z1 projection")],
            xlabel="Re z1", ylabel="Im z1",
            title=f"level set mu = {b} (first-coordinate projection)"))
        results.append(CheckResult(
            f"degree.b={b}", cert.degree, 1, "==", cert.passed,
            f"cross-check {cert.cross_check_degree}, counts "
            f"{cert.per_target_counts}, area integral {fmt(cert.area_integral)}"))
    out.write("degrees.csv", rows_csv_text(
        ["level", "degree", "cross_check", "area_integral", "homotopy_passed",
         "passed"], rows))
    return results


def _run_fibers(cfg, out):
    f = _field_from(cfg)
    p = cfg.params
    if p.get("targets"):
        targets = [parse_point(t) for t in p["targets"]]
    else:
        rng = substream(cfg.seed, "fibers", "targets")
        count = int(p.get("count", 10))
        targets = [rng.normal(size=2) + 1j * rng.normal(size=2)
                   for _ in range(count)]
    starts = int(p.get("starts", 48))
    box = float(p.get("box_radius", 2.0))
    results = []
    rows = []
    centers = []
    for k, c in enumerate(targets):
        report = gradient_fiber(f, c, starts=starts, seed=cfg.seed + k,
                                box_radius=box)
        for cl in report.clusters:
            rows.append([c[0], c[1], cl.center[0], cl.center[1], cl.members,
                         cl.residual, cl.probe_spread, cl.isolated])
            centers.append(cl.center)
        results.append(CheckResult(
            f"fibers.target{k}", len(report.clusters), 0, ">",
            len(report.clusters) > 0 and all(cl.isolated for cl in report.clusters),
            f"c = ({fmt(c[0])}, {fmt(c[1])}), {report.non_converged} "
            f"non-converged, phase hypothesis ok: {report.phase_hypothesis_ok}"))
    out.write("fibers.csv", rows_csv_text(
        ["target_z1", "target_z2", "center_z1", "center_z2", "members",
         "residual", "probe_spread", "isolated"], rows))
    if centers:
        out.write("fibers.svg", scatter_plot(
            [([c[0].real for c in centers], [c[0].imag for c in centers],
               "z1 of cluster centers")],
            xlabel="Re z1", ylabel="Im z1", title="gradient-fiber clusters"))
    return results


def _run_average(cfg, out):
    f = _field_from(cfg)
    action = build_action(cfg.action_spec)
    nodes = int(cfg.params.get("nodes", 8))
    rule = QuadratureRule.default_for(action, nodes)
    avg = haar_average(f, action, rule)
    inv = invariance_residual(avg, action, rule, n=64, seed=cfg.seed)
    out.write("averaged.txt", to_string(avg.expression) + "\n")
    return [
        CheckResult.less("average.invariance-residual", inv.max_residual, 1e-10,
                         f"{len(rule.nodes)} quadrature nodes"),
        CheckResult.less("average.realness", avg.realness.max_abs_imag, 1e-10,
                         f"{avg.realness.sample_count} samples"),
    ]


def _run_orbit_dim(cfg, out):
    action = build_action(cfg.action_spec)
    n = int(cfg.params.get("samples", 64))
    radius = float(cfg.params.get("radius", 2.0))
    rng = substream(cfg.seed, "orbit-dim")
    pts = sample_ball(action.dimension, radius, n, rng)
    rows = []
    ranks = []
    for pt in pts:
        info = orbit_dimension(action, pt)
        ranks.append(info.rank)
        rows.append(list(pt) + [info.rank, info.fixed])
    origin = orbit_dimension(action, np.zeros(action.dimension))
    rows.append([0j] * action.dimension + [origin.rank, origin.fixed])
    header = [f"z{j + 1}" for j in range(action.dimension)] + ["rank", "fixed"]
    out.write("orbit_dims.csv", rows_csv_text(header, rows))
    small = min([*ranks, origin.rank])
    return [CheckResult(
        "orbit-dim.small-orbit-exists", small, action.dimension, "<",
        small <= action.dimension,
        f"ranks over {n} samples: min {min(ranks)}, max {max(ranks)}; "
        f"origin rank {origin.rank}")]


def _run_confine(cfg, out):
    f = _field_from(cfg)
    action = build_action(cfg.action_spec)
    p = cfg.params
    mcfg = MultistartConfig(
        starts=int(p.get("starts", 64)),
        box_radius=float(p.get("box_radius", 1.5)), seed=cfg.seed)
    report = critical_confinement_experiment(f, action, mcfg)
    rows = [[*cl.center, cl.members, cl.residual, cl.distance_to_fixed,
             cl.orbit_rank, cl.fixed] for cl in report.clusters]
    out.write("confine.csv", rows_csv_text(
        [f"z{j + 1}" for j in range(f.dimension)]
        + ["members", "residual", "distance_to_fixed", "orbit_rank", "fixed"],
        rows))
    worst = max((cl.distance_to_fixed for cl in report.clusters), default=np.inf)
    return [CheckResult(
        "confine.max-distance-to-fixed-set", worst, 1e-6, "<", report.passed,
        f"{len(report.clusters)} cluster(s), hypothesis met: "
        f"{report.hypothesis_met}; {report.label}")]


def _run_verify(cfg, out):
    p = cfg.params
    results = verify_suite(
        seed=cfg.seed,
        degree_levels=tuple(p.get("degree_levels", (0.5, 1.0, 2.0))),
        fiber_targets=int(p.get("fiber_targets", 10)))
    out.write("checks.jsonl", results_jsonl_text(results))
    return results


_HANDLERS = {
    "check-psh": _run_check_psh,
    "flow": _run_flow,
    "degree": _run_degree,
    "fibers": _run_fibers,
    "average": _run_average,
    "orbit-dim": _run_orbit_dim,
    "confine": _run_confine,
    "verify": _run_verify,
}


def run(cfg: ExperimentConfig) -> RunReport:
    """Execute one experiment; writes all artifacts under cfg.output."""
    out = _Out(cfg.output)
    start = time.perf_counter()
    try:
        results = _HANDLERS[cfg.kind](cfg, out)
    except Exception as err:  # captured into the report with a failing row
        results = [CheckResult(f"{cfg.kind}.runtime-error", 1.0, 0.0, "==",
                               False, f"{type(err).__name__}: {err}")]
    wall = time.perf_counter() - start
    out.write("summary.csv", summary_csv_text(results))
    report = RunReport(kind=cfg.kind, seed=cfg.seed, config_hash=cfg.config_hash,
                       config_text=cfg.source_text, results=results,
                       artifacts=list(out.names), wall_time=wall)
    out.write("report.txt", report_txt(report))
    return report
