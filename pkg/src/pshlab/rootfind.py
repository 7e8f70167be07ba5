"""Damped-Newton multistart solver with deterministic clustering.

Shared by the critical-point confinement experiment and the gradient-fiber
search: both solve a square real system G(x) = 0 with an exact Jacobian,
polish from many seeded starts, and merge the converged points into
clusters.  Per-start seeds are derived from one root seed so runs are
reproducible regardless of execution order.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np


def substream(seed, *names):
    """Named deterministic RNG substream derived from one root seed."""
    key = [int(seed) & 0xFFFFFFFF] + [zlib.crc32(str(n).encode()) for n in names]
    return np.random.default_rng(key)


@dataclass(frozen=True)
class NewtonResult:
    start: np.ndarray
    point: np.ndarray
    residual: float
    iterations: int
    converged: bool


def damped_newton(fun, jac, x0, tol=1e-10, max_iter=60, max_step=1.0):
    """Newton iteration on G(x) = 0 with backtracking on |G|^2.

    Falls back to a Levenberg-style shift when the Jacobian solve fails or
    produces an uphill direction.
    """
    x = np.asarray(x0, dtype=float).copy()
    g = fun(x)
    norm = np.linalg.norm(g)
    for it in range(1, max_iter + 1):
        if norm < tol:
            return NewtonResult(np.asarray(x0, dtype=float), x, float(norm), it - 1, True)
        J = jac(x)
        step = None
        lam = 0.0
        for _ in range(8):
            try:
                A = J if lam == 0.0 else J + lam * np.eye(len(x))
                cand = np.linalg.solve(A, -g)
            except np.linalg.LinAlgError:
                lam = max(10 * lam, 1e-8 * max(1.0, np.linalg.norm(J, np.inf)))
                continue
            if np.all(np.isfinite(cand)):
                step = cand
                break
            lam = max(10 * lam, 1e-8)
        if step is None:
            return NewtonResult(np.asarray(x0, dtype=float), x, float(norm), it, False)
        limit = np.linalg.norm(step)
        if limit > max_step:
            step = step * (max_step / limit)
        alpha = 1.0
        improved = False
        for _ in range(30):
            x_new = x + alpha * step
            g_new = fun(x_new)
            norm_new = np.linalg.norm(g_new)
            if np.isfinite(norm_new) and norm_new < norm:
                x, g, norm = x_new, g_new, norm_new
                improved = True
                break
            alpha *= 0.5
        if not improved:
            return NewtonResult(np.asarray(x0, dtype=float), x, float(norm), it, False)
    converged = norm < tol
    return NewtonResult(np.asarray(x0, dtype=float), x, float(norm), max_iter, converged)


@dataclass(frozen=True)
class Cluster:
    center: np.ndarray
    members: int
    residual: float           # best member residual


def cluster_points(results, radius):
    """Greedy radius clustering over converged results, order-independent.

    Points are visited in a canonical (lexicographic) order so the cluster
    set does not depend on multistart scheduling.
    """
    converged = [r for r in results if r.converged]
    pts = sorted(converged, key=lambda r: tuple(np.round(r.point, 12)))
    clusters = []
    for r in pts:
        placed = False
        for c in clusters:
            if np.linalg.norm(r.point - c["sum"] / c["n"]) < radius:
                c["sum"] += r.point
                c["n"] += 1
                c["res"] = min(c["res"], r.residual)
                placed = True
                break
        if not placed:
            clusters.append({"sum": r.point.copy(), "n": 1, "res": r.residual})
    out = [Cluster(center=c["sum"] / c["n"], members=c["n"], residual=float(c["res"]))
           for c in clusters]
    out.sort(key=lambda c: tuple(np.round(c.center, 12)))
    return out


def multistart(fun, jac, starts, tol=1e-10, max_iter=60, cluster_radius=1e-6,
               max_step=1.0):
    """Run damped Newton from every start; return (clusters, failures)."""
    results = [damped_newton(fun, jac, x0, tol=tol, max_iter=max_iter,
                             max_step=max_step)
               for x0 in starts]
    clusters = cluster_points(results, cluster_radius)
    failures = [r for r in results if not r.converged]
    return clusters, failures
