"""Runtime certification: curvature-property checkers and bound monitors.

Monitors are pure functions of a :class:`~bisaddle.solvers.RunTrace`; they
never re-run a solver, so a trace read back from CSV certifies exactly the
same way as the in-memory one.  All bound checks use additive slack
``1e-9 * (1 + bound)`` because the certified quantities span many orders of
magnitude along a run and eventually sit on the floating-point floor.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import MissingField
from .prox import prox_quadratic

BOUND_SLACK = 1e-9
PROPERTY_SLACK = 1e-10


@dataclass
class PropertyReport:
    """Outcome of one property or bound check over many trials."""

    name: str
    trials: int
    failures: int
    worst_slack: float

    @property
    def passed(self):
        return self.failures == 0


class _Margins:
    """Accumulates signed margins ``rhs - lhs`` with per-check tolerances."""

    def __init__(self, name):
        self.name = name
        self.trials = 0
        self.failures = 0
        self.worst = math.inf

    def add(self, lhs, rhs, tol):
        margin = rhs - lhs
        self.trials += 1
        if margin < -tol:
            self.failures += 1
        if margin < self.worst:
            self.worst = margin

    def report(self):
        worst = self.worst if self.trials else math.nan
        return PropertyReport(self.name, self.trials, self.failures, worst)


def _bound_tol(rhs):
    return BOUND_SLACK * (1.0 + abs(rhs))


def check_smooth_strong(q, n, seed=0):
    """Joint smoothness/strong-convexity inequality on seeded random pairs.

    Checks ``<dg, dx> >= (L mu/(L+mu)) |dx|^2 + (1/(L+mu)) |dg|^2`` where
    ``dg`` and ``dx`` are gradient and point differences.
    """
    rng = np.random.default_rng(seed)
    ell, mu = q.L, q.mu
    margins = _Margins("smooth_strong")
    X1 = rng.standard_normal((n, q.dim))
    X2 = rng.standard_normal((n, q.dim))
    G1 = X1 @ q.H + q.c
    G2 = X2 @ q.H + q.c
    DX = X1 - X2
    DG = G1 - G2
    lhs = np.einsum("ij,ij->i", DG, DX)
    rhs = (ell * mu / (ell + mu)) * np.einsum("ij,ij->i", DX, DX) + (
        1.0 / (ell + mu)
    ) * np.einsum("ij,ij->i", DG, DG)
    for left, right in zip(lhs, rhs):
        # inequality direction: lhs >= rhs, so margin is lhs - rhs
        tol = PROPERTY_SLACK * (1.0 + abs(left) + abs(right))
        margins.add(right, left, tol)
    return margins.report()


def check_smoothness_equivalences(q, n, seed=0):
    """Three equivalent smoothness conditions with constant ``L``.

    (i) gradient Lipschitz, (ii) quadratic upper bound,
    (iii) cocoercivity.  Each seeded pair is checked against all three.
    """
    rng = np.random.default_rng(seed)
    ell = q.L
    margins = _Margins("smoothness_equivalences")
    X1 = rng.standard_normal((n, q.dim))
    X2 = rng.standard_normal((n, q.dim))
    G1 = X1 @ q.H + q.c
    G2 = X2 @ q.H + q.c
    DX = X1 - X2
    DG = G1 - G2
    ndx = np.linalg.norm(DX, axis=1)
    ndg = np.linalg.norm(DG, axis=1)
    vals1 = 0.5 * np.einsum("ij,ij->i", X1 @ q.H, X1) + X1 @ q.c
    vals2 = 0.5 * np.einsum("ij,ij->i", X2 @ q.H, X2) + X2 @ q.c
    inner = np.einsum("ij,ij->i", DG, DX)
    for i in range(n):
        tol = PROPERTY_SLACK * (1.0 + ndg[i] + ell * ndx[i])
        margins.add(ndg[i], ell * ndx[i], tol)
        lin = vals2[i] - vals1[i] - float(G1[i] @ (X2[i] - X1[i]))
        quad = 0.5 * ell * ndx[i] ** 2
        tol = PROPERTY_SLACK * (1.0 + abs(lin) + quad)
        margins.add(lin, quad, tol)
        coco = ndg[i] ** 2 / ell
        tol = PROPERTY_SLACK * (1.0 + abs(inner[i]) + coco)
        margins.add(coco, inner[i], tol)
    return margins.report()


def check_prox_nonexpansive(q, gamma, n, seed=0):
    """Prox steps never expand distances between their anchor points."""
    rng = np.random.default_rng(seed)
    margins = _Margins("prox_nonexpansive")
    for _ in range(n):
        x1 = rng.standard_normal(q.dim)
        x2 = rng.standard_normal(q.dim)
        u1 = prox_quadratic(q, gamma, x1)
        u2 = prox_quadratic(q, gamma, x2)
        lhs = float(np.linalg.norm(u1 - u2))
        rhs = float(np.linalg.norm(x1 - x2))
        margins.add(lhs, rhs * (1.0 + 1e-12), 0.0)
    return margins.report()


def gradient_fd_check(q, x):
    """Max relative error of the gradient against central differences."""
    x = np.asarray(x, dtype=float)
    step = 1e-5 * (1.0 + float(np.linalg.norm(x)))
    grad = q.H @ x + q.c
    fd = np.empty_like(grad)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = step
        fd[i] = (q.value(x + e) - q.value(x - e)) / (2.0 * step)
    scale = 1.0 + float(np.abs(grad).max(initial=0.0))
    return float(np.abs(fd - grad).max(initial=0.0) / scale)


def _require(trace, *names):
    for name in names:
        if name not in trace.aux:
            raise MissingField(f"trace lacks aux series {name!r}")
    return [trace.aux[name] for name in names]


def _require_params(trace, *names):
    missing = [n for n in names if n not in trace.params]
    if missing:
        raise MissingField(f"trace lacks params {missing}")
    return [trace.params[n] for n in names]


def _monitor_agd(trace):
    (gaps,) = _require(trace, "gap")
    margins = _Margins("agd_bound")
    for gap, bound in zip(gaps, trace.bound):
        margins.add(gap, bound, _bound_tol(bound))
    return margins.report()


def _monitor_apfb(trace):
    mu_x, mu_y = _require_params(trace, "mu_x", "mu_y")
    margins = _Margins("apfb_bound")
    for dsx, dsy, bound in zip(trace.dist_sq_x, trace.dist_sq_y, trace.bound):
        margins.add(mu_x * dsx + mu_y * dsy, bound, _bound_tol(bound))
    return margins.report()


def _monitor_dppa(trace):
    (eta,) = _require_params(trace, "eta")
    zs, ws = _require(trace, "z_dist_sq", "w_dist_sq")
    margins = _Margins("dppa_contraction")
    for i in range(len(zs) - 1):
        prev = zs[i] + ws[i]
        nxt = zs[i + 1] + ws[i + 1]
        rhs = eta * prev
        margins.add(nxt, rhs, _bound_tol(rhs))
    return margins.report()


def _monitor_dppa_remark(trace):
    (eta,) = _require_params(trace, "eta")
    zs, lhss = _require(trace, "z_dist_sq", "remark_lhs_sq")
    margins = _Margins("dppa_remark")
    for i, lhs in enumerate(lhss):
        rhs = eta * zs[i]
        margins.add(lhs, rhs, _bound_tol(rhs))
    return margins.report()


def _monitor_distance_bound(trace, name, weighted=False, start_k=1):
    if weighted:
        mu_x, mu_y = _require_params(trace, "mu_x", "mu_y")
    margins = _Margins(name)
    for k, dsx, dsy, bound in zip(
        trace.k, trace.dist_sq_x, trace.dist_sq_y, trace.bound
    ):
        if k < start_k:
            continue
        lhs = mu_x * dsx + mu_y * dsy if weighted else dsx + dsy
        margins.add(lhs, bound, _bound_tol(bound))
    return margins.report()


def _monitor_dippa_inner(trace):
    pg, dg, sd = _require(trace, "primal_gap", "dual_gap", "sub_dist_sq")
    margins = _Margins("dippa_inner")
    for i in range(len(pg)):
        eps_k = trace.eps[i]
        delta_k = trace.delta[i]
        margins.add(pg[i], eps_k, _bound_tol(eps_k))
        margins.add(dg[i], eps_k, _bound_tol(eps_k))
        margins.add(sd[i], delta_k, _bound_tol(delta_k))
    return margins.report()


def _monitor_aipfb_inner(trace):
    pg, dg = _require(trace, "primal_gap", "dual_gap")
    margins = _Margins("aipfb_inner")
    for i in range(len(pg)):
        eps_k = trace.eps[i]
        margins.add(pg[i], eps_k, _bound_tol(eps_k))
        margins.add(dg[i], eps_k, _bound_tol(eps_k))
    return margins.report()


def _monitor_catalyst_sub(trace):
    (sd,) = _require(trace, "sub_dist_sq")
    margins = _Margins("catalyst_sub")
    for i in range(len(sd)):
        eps_k = trace.eps[i]
        margins.add(sd[i], eps_k, _bound_tol(eps_k))
    return margins.report()


_MONITORS = {
    "agd": _monitor_agd,
    "apfb": _monitor_apfb,
    "dppa": _monitor_dppa,
    "dppa_remark": _monitor_dppa_remark,
    "coro_dppa": lambda t: _monitor_distance_bound(t, "coro_dppa"),
    "dippa_out": lambda t: _monitor_distance_bound(t, "dippa_out"),
    "aipfb_out": lambda t: _monitor_distance_bound(
        t, "aipfb_out", weighted=True, start_k=2
    ),
    "dippa_inner": _monitor_dippa_inner,
    "aipfb_inner": _monitor_aipfb_inner,
    "catalyst_sub": _monitor_catalyst_sub,
}

# monitors run on every experiment, keyed by the solver token
DEFAULT_MONITORS = {
    "agd": ("agd",),
    "apfb": ("apfb",),
    "dppa": ("dppa", "dppa_remark", "coro_dppa"),
    "dippa": ("dippa_out", "dippa_inner"),
    "aipfb": ("aipfb_out", "aipfb_inner"),
    "catalyst-dippa": ("catalyst_sub",),
    "catalyst-aipfb": ("catalyst_sub",),
}


def monitor_bound(trace, which):
    """Evaluate one named bound over an entire trace.

    Raises :class:`~bisaddle.errors.MissingField` when the trace lacks a
    series the monitor needs (e.g. it was recorded without a reference
    saddle).
    """
    try:
        monitor = _MONITORS[which]
    except KeyError:
        raise MissingField(
            f"unknown monitor {which!r}; choose from {sorted(_MONITORS)}"
        ) from None
    return monitor(trace)


def monitors_for(solver):
    """Monitor names run by default for a solver token."""
    return DEFAULT_MONITORS.get(solver, ())
