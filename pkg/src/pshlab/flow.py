"""Gradient-flow integration with monotonicity, arc-length, and decay-rate accounting.

The flow is x' = -grad(u) under either the flat metric or the metric whose
matrix is the Levi form of u itself.  In both cases the speed |x'| in the
active metric equals the metric gradient norm, and d/dt u = -|grad u|^2, so
a single stage-weighted quadrature of the speed serves three purposes:
arc length, the per-step energy identity, and the stopping test.

Integration uses the Dormand-Prince 5(4) embedded pair with a PI step
controller; every accepted and rejected attempt is recorded.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .expr import PotentialField
from .geometry import realify, unrealify


class SingularMetricError(Exception):
    def __init__(self, message, eigenvalue=None, point=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue
        self.point = point


class InsufficientTailError(Exception):
    pass


@dataclass(frozen=True)
class FlowConfig:
    metric: str = "euclidean"          # "euclidean" | "kahler"
    initial_step: float = 0.01
    rtol: float = 1e-8
    atol: float = 1e-10
    grad_stop: float = 1e-8
    max_time: float = 1e6
    max_steps: int = 100_000

    def __post_init__(self):
        if self.metric not in ("euclidean", "kahler"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.rtol <= 0 or self.atol <= 0 or self.grad_stop <= 0:
            raise ValueError("tolerances and the stop threshold must be positive")


@dataclass(frozen=True)
class FlowSample:
    t: float
    point: np.ndarray            # complex d-vector
    u: float
    grad_norm: float             # in the active metric
    arc_length: float
    accepted: bool


@dataclass(frozen=True)
class FlowTrajectory:
    samples: tuple               # accepted and rejected records, in order
    termination: str             # gradient-stop | max-time | max-steps | step-failure
    metric: str
    arc_length: float
    energy_residuals: tuple      # per accepted step: |du + int |grad u|^2 dt|
    energy_tolerances: tuple     # the matching 10 * local tolerance bounds
    monotonicity_violations: tuple  # (step index, magnitude) for u increases

    @property
    def accepted(self):
        return tuple(s for s in self.samples if s.accepted)

    @property
    def final(self):
        return self.accepted[-1]


_MIN_EIG = 1e-10


def _velocity_speed(f: PotentialField, p, metric):
    # Kähler case: with the Levi pairing <a, b> = Re(sum H_jk a_j conj(b_k)),
    # the metric gradient solving <G, w> = du(w) is G = 2 conj(H)^{-1} g, and
    # the metric speed obeys speed^2 = 4 Re(g^T H^{-1} conj(g)) = -du/dt.
    g = f.grad_dbar([p])[0]
    if metric == "euclidean":
        v = -2.0 * g
        return v, 2.0 * float(np.linalg.norm(g))
    H = f.levi_matrices([p])[0]
    H = 0.5 * (H + H.conj().T)
    eig = np.linalg.eigvalsh(H)
    if eig[0] <= _MIN_EIG:
        raise SingularMetricError(
            f"Levi metric is not positive definite: min eigenvalue {eig[0]:.3e}",
            eigenvalue=float(eig[0]), point=tuple(p))
    w = np.linalg.solve(H, g.conjugate())
    v = -2.0 * w.conjugate()
    speed_sq = 4.0 * float(np.real(g @ w))
    return v, math.sqrt(max(speed_sq, 0.0))


def velocity(f: PotentialField, p, metric="euclidean"):
    """Flow velocity at p: -2 dbar(u) (flat) or -2 conj(H)^{-1} dbar(u) (Levi metric)."""
    p = np.asarray(p, dtype=complex).ravel()
    return _velocity_speed(f, p, metric)[0]


# Dormand-Prince 5(4) tableau; the propagated solution is 5th order and the
# last stage equals the RHS at the new point (FSAL).
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
          187 / 2100, 1 / 40)


def integrate_flow(f: PotentialField, x0, cfg: FlowConfig = FlowConfig()) -> FlowTrajectory:
    """Integrate x' = -grad u from x0 until a configured stopping condition.

    Arc length and the energy integral int |grad u|^2 dt accumulate through
    the same 5th-order stage quadrature as the state itself, so the
    recorded per-step energy identity holds to the integrator's accuracy.
    """
    p0 = np.asarray(x0, dtype=complex).ravel()
    metric = cfg.metric

    def rhs(y):
        v, speed = _velocity_speed(f, unrealify(y), metric)
        return realify(v), speed

    y = realify(p0)
    t = 0.0
    arc = 0.0
    k1, speed0 = rhs(y)
    u0 = float(f.values([p0])[0])
    samples = [FlowSample(t=0.0, point=p0.copy(), u=u0, grad_norm=speed0,
                          arc_length=0.0, accepted=True)]
    energy_res = []
    energy_tol = []
    violations = []

    if speed0 <= cfg.grad_stop:
        return FlowTrajectory(tuple(samples), "gradient-stop", metric, 0.0,
                              (), (), ())

    h = cfg.initial_step
    err_prev = 1.0
    termination = None
    steps = 0
    n_stages = 7
    speeds = np.zeros(n_stages)
    ks = [None] * n_stages
    speed_at_y = speed0
    u_at_y = u0

    while termination is None:
        if steps >= cfg.max_steps:
            termination = "max-steps"
            break
        if h < 1e-13 * max(1.0, abs(t)):
            termination = "step-failure"
            break
        if t + h >= cfg.max_time:
            h = cfg.max_time - t

        ks[0] = k1
        speeds[0] = speed_at_y
        for i in range(1, n_stages):
            yi = y + h * sum(a * ks[j] for j, a in enumerate(_DP_A[i]) if a != 0.0)
            ks[i], speeds[i] = rhs(yi)
        y_new = y + h * sum(b * ks[i] for i, b in enumerate(_DP_B5) if b != 0.0)
        err_vec = h * sum((b5 - b4) * ks[i]
                          for i, (b5, b4) in enumerate(zip(_DP_B5, _DP_B4)))
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        steps += 1

        if err <= 1.0:
            p_new = unrealify(y_new)
            u_new = float(f.values([p_new])[0])
            arc_inc = h * float(np.dot(_DP_B5, speeds))
            energy_int = h * float(np.dot(_DP_B5, speeds ** 2))
            arc += arc_inc
            t += h
            res = abs(u_new - u_at_y + energy_int)
            tol_local = 10.0 * (cfg.atol + cfg.rtol * max(abs(u_at_y), abs(u_new)))
            energy_res.append(res)
            energy_tol.append(tol_local)
            if u_new > u_at_y:
                violations.append((len(energy_res) - 1, u_new - u_at_y))
            speed_new = speeds[-1]  # FSAL stage sits at the accepted point
            samples.append(FlowSample(t=t, point=p_new, u=u_new,
                                      grad_norm=speed_new, arc_length=arc,
                                      accepted=True))
            y = y_new
            k1 = ks[-1]
            speed_at_y = speed_new
            u_at_y = u_new
            if speed_new <= cfg.grad_stop:
                termination = "gradient-stop"
            elif t >= cfg.max_time:
                termination = "max-time"
            factor = 0.9 * err ** -0.14 * err_prev ** 0.08 if err > 0 else 5.0
            err_prev = max(err, 1e-10)
        else:
            samples.append(FlowSample(t=t + h, point=unrealify(y_new), u=float("nan"),
                                      grad_norm=float("nan"), arc_length=arc,
                                      accepted=False))
            factor = max(0.1, 0.9 * err ** -0.2)
        h *= min(5.0, max(0.2, factor))

    return FlowTrajectory(tuple(samples), termination, metric, arc,
                          tuple(energy_res), tuple(energy_tol), tuple(violations))


@dataclass(frozen=True)
class LojasiewiczEstimate:
    alpha: float
    constant: float
    window: tuple                # (first index, last index) into accepted samples
    residual: float              # RMS of the log-log fit residuals
    u_limit: float


def _limit_gap_estimate(u_values):
    """Estimate u_N - u_infinity from the trailing decrement sequence.

    Trailing decrements of a converging flow decay roughly geometrically;
    the unobserved remainder is the last decrement times r/(1-r).
    """
    diffs = -np.diff(u_values)
    positive = diffs[diffs > 0]
    if positive.size < 3:
        return 0.0
    tail = positive[-10:]
    ratios = tail[1:] / tail[:-1]
    r = float(np.clip(np.median(ratios), 0.0, 0.98))
    return float(tail[-1] * r / (1.0 - r))


def estimate_lojasiewicz(traj: FlowTrajectory, window_size=40) -> LojasiewiczEstimate:
    """Fit log|grad u| = alpha log(u - u_inf) - log C over the trajectory tail.

    u_inf is the final sampled value, which sits above the true limit by an
    unobserved gap; samples are used only where u - u_inf exceeds both the
    roundoff floor 10*eps*|u_inf| and 100x the estimated gap, so the
    subtraction perturbs the fitted logs by at most about a percent.
    """
    if traj.termination != "gradient-stop":
        raise InsufficientTailError(
            f"trajectory terminated by {traj.termination}, not gradient-stop")
    acc = traj.accepted
    u_inf = acc[-1].u
    floor = 10.0 * np.finfo(float).eps * abs(u_inf)
    gap = _limit_gap_estimate([s.u for s in acc])
    cut = max(floor, 100.0 * gap)
    eligible = [i for i, s in enumerate(acc)
                if s.u - u_inf > cut and s.grad_norm > 0]
    if len(eligible) < 20:
        raise InsufficientTailError(
            f"only {len(eligible)} usable tail samples, need at least 20")
    window = eligible[-window_size:]
    X = np.array([math.log(acc[i].u - u_inf) for i in window])
    Y = np.array([math.log(acc[i].grad_norm) for i in window])
    A = np.stack([X, np.ones_like(X)], axis=1)
    (alpha, intercept), *_ = np.linalg.lstsq(A, Y, rcond=None)
    residual = float(np.sqrt(np.mean((A @ [alpha, intercept] - Y) ** 2)))
    if not 0 < alpha < 1:
        raise InsufficientTailError(
            f"fitted exponent {alpha:.3f} outside (0, 1); tail is not in the "
            "power-law regime")
    return LojasiewiczEstimate(alpha=float(alpha), constant=float(math.exp(-intercept)),
                               window=(window[0], window[-1]), residual=residual,
                               u_limit=u_inf)


@dataclass(frozen=True)
class ConvergenceReport:
    limit_point: np.ndarray
    final_grad_norm: float       # re-evaluated independently after integration
    arc_length: float
    violation_count: int
    worst_violation: float
    tail_ratio: float            # geometric-mean ratio of trailing arc increments
    lojasiewicz: LojasiewiczEstimate | None
    termination: str
    passed: bool


def convergence_report(traj: FlowTrajectory, f: PotentialField) -> ConvergenceReport:
    """Certify gradient-stop termination, monotonicity, and arc-length decay."""
    acc = traj.accepted
    limit = acc[-1].point
    _, final_grad = _velocity_speed(f, limit, traj.metric)

    worst = 0.0
    ok_monotone = True
    for idx, mag in traj.monotonicity_violations:
        worst = max(worst, mag)
        if mag > traj.energy_tolerances[idx]:
            ok_monotone = False

    increments = np.diff([s.arc_length for s in acc])
    increments = increments[increments > 0]
    if increments.size >= 2:
        tail = increments[-20:]
        ratio = float((tail[-1] / tail[0]) ** (1.0 / max(1, len(tail) - 1)))
    else:
        ratio = 0.0

    loja = None
    try:
        loja = estimate_lojasiewicz(traj)
    except InsufficientTailError:
        pass

    passed = (traj.termination == "gradient-stop" and ok_monotone and ratio < 1.0)
    return ConvergenceReport(
        limit_point=limit, final_grad_norm=final_grad, arc_length=traj.arc_length,
        violation_count=len(traj.monotonicity_violations), worst_violation=worst,
        tail_ratio=ratio, lojasiewicz=loja, termination=traj.termination,
        passed=passed)


def trajectory_jsonl_lines(traj: FlowTrajectory):
    """One JSON object per accepted step, then a summary block."""
    lines = []
    for s in traj.accepted:
        lines.append(json.dumps({
            "t": s.t,
            "point": [[c.real, c.imag] for c in s.point],
            "u": s.u,
            "gradNorm": s.grad_norm,
            "arcLength": s.arc_length,
        }))
    lines.append(json.dumps({"summary": {
        "termination": traj.termination,
        "metric": traj.metric,
        "acceptedSteps": len(traj.accepted) - 1,
        "rejectedSteps": len(traj.samples) - len(traj.accepted),
        "arcLength": traj.arc_length,
        "finalGradNorm": traj.final.grad_norm,
        "monotonicityViolations": len(traj.monotonicity_violations),
    }}))
    return lines
