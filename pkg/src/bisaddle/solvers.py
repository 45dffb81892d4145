"""Iterative saddle-point solvers with oracle accounting and bound traces.

Five methods, all exposed as sklearn-style estimators: a Nesterov momentum
minimizer, an exact alternating-prox primal-dual method, a double-resolvent
splitting for balanced problems, and inexact variants of the latter two
that replace every exact subproblem with a budgeted inner run whose step
counts and tolerances come from closed-form schedules.

Each ``fit`` owns a fresh :class:`~bisaddle.problem.OracleTally` unless one
is passed in, and records a :class:`RunTrace` that the ``certify`` module
replays to check the advertised convergence bounds.
"""

import math

import numpy as np
from sklearn.base import BaseEstimator

from .errors import BadC0, Unbalanced
from .problem import OracleTally, couple
from .prox import prox_quadratic, prox_separable, prox_skew
from .validation import check_count, check_positive, check_vector

_NORM_FLOOR = 1e-14


def _effective_norm(norm_A, mu_x, mu_y):
    """Coupling norm floored away from zero for step sizes that divide by it."""
    return max(norm_A, _NORM_FLOOR * math.sqrt(mu_x * mu_y))


def agd_steps_for(effective_kappa, log_argument):
    """Momentum-descent step count guaranteeing a target via the rate bound.

    Returns ``floor(sqrt(effective_kappa) * ln(log_argument)) + 1``, i.e.
    the number of steps after which the geometric decay
    ``exp(-T / sqrt(kappa_eff))`` has shrunk a factor of ``log_argument``.
    Arguments at or below 1 mean the target is already met; 0 is returned.
    """
    effective_kappa = check_positive(effective_kappa, "effective_kappa")
    if log_argument <= 1.0:
        return 0
    return int(math.floor(math.sqrt(effective_kappa) * math.log(log_argument))) + 1


def inexact_prox_tolerances(k, kappa, L, mu, norm_A, C0):
    """Per-outer-iteration tolerances for the inexact double-resolvent method.

    Both schedules are geometric with ratio ``1 - rho`` where
    ``rho = 1 / (2 sqrt(kappa))``: the primal-gap target for the decoupled
    subproblems and the squared-distance target for the coupled one.
    """
    k = check_count(k, "k")
    rho = 1.0 / (2.0 * math.sqrt(kappa))
    decay = (1.0 - rho) ** (k + 1)
    eps_k = C0 * mu / 16.0 * decay
    delta_k = (
        C0 * L * mu / (2.0 * (1.0 + math.sqrt(kappa)) * (L * mu + norm_A**2)) * decay
    )
    return eps_k, delta_k


def inexact_prox_inner_counts(kappa, norm_A, L, mu, rho, C):
    """Inner step counts for the inexact double-resolvent method.

    ``K1`` budgets the momentum-descent runs on the two decoupled
    subproblems (effective condition number ``sqrt(kappa)``); ``K2``
    budgets the primal-dual run on the coupled quadratic subproblem.  Both
    are independent of the outer iteration index.
    """
    arg1 = 32.0 * C * (math.sqrt(L) + math.sqrt(mu)) ** 2 / (mu * (1.0 - rho))
    K1 = agd_steps_for(math.sqrt(kappa), arg1)
    arg2 = (
        20.0
        * C
        * (1.0 + math.sqrt(kappa))
        * (L * mu + norm_A**2)
        / (L * mu * (1.0 - rho))
    )
    prefactor = norm_A / math.sqrt(L * mu) + 1.0
    K2 = int(math.floor(prefactor * math.log(arg2))) + 2 if arg2 > 1.0 else 2
    return max(K1, 1), max(K2, 1)


def accel_fb_constants(mu_x, mu_y, norm_A):
    """Momentum, outer rate, and bound constant of the inexact primal-dual method."""
    root = math.sqrt(mu_x * mu_y)
    theta = norm_A / (root + norm_A)
    rho = root / (2.0 * root + 4.0 * norm_A)
    C = norm_A / root + 1.0
    return theta, rho, C


def accel_fb_tolerance(k, mu_x, mu_y, norm_A, C0):
    """Inner-gap tolerance schedule of the inexact primal-dual method."""
    k = check_count(k, "k")
    theta, rho, _ = accel_fb_constants(mu_x, mu_y, norm_A)
    return C0 * rho * (1.0 - theta) / 16.0 * (1.0 - rho) ** (k - 1)


class RunTrace:
    """Column-oriented per-iteration record of one solver run.

    Rows hold the iteration index, squared distances to the reference
    saddle, the oracle-tally snapshot, the monitored bound value, and the
    tolerance schedules where applicable.  Solver-specific scalar series
    (subproblem gaps, shifted-sequence distances) live in ``aux``.
    """

    def __init__(self, solver, params):
        self.solver = solver
        self.params = dict(params)
        self.k = []
        self.dist_sq_x = []
        self.dist_sq_y = []
        self.bound = []
        self.eps = []
        self.delta = []
        self.tallies = []
        self.aux = {}
        self.xs = []
        self.ys = []

    def append(self, k, dist_sq_x, dist_sq_y, tally, bound=math.nan,
               eps=math.nan, delta=math.nan, x=None, y=None):
        self.k.append(int(k))
        self.dist_sq_x.append(float(dist_sq_x))
        self.dist_sq_y.append(float(dist_sq_y))
        self.bound.append(float(bound))
        self.eps.append(float(eps))
        self.delta.append(float(delta))
        self.tallies.append(tally.snapshot() if tally is not None else (0, 0, 0, 0))
        if x is not None:
            self.xs.append(np.array(x))
        if y is not None:
            self.ys.append(np.array(y))

    def add_aux(self, name, value):
        self.aux.setdefault(name, []).append(float(value))

    @property
    def totals(self):
        return self.tallies[-1] if self.tallies else (0, 0, 0, 0)

    def __len__(self):
        return len(self.k)


def _agd_run(grad, x0, ell, mu, steps):
    """Plain momentum-descent loop; ``grad`` is responsible for tallying."""
    kappa = ell / mu
    eta = 1.0 / ell
    theta = (math.sqrt(kappa) - 1.0) / (math.sqrt(kappa) + 1.0)
    x = x0
    xt = x0
    for _ in range(steps):
        x_new = xt - eta * grad(xt)
        xt = x_new + theta * (x_new - x)
        x = x_new
    return x


def _dist_sq(ref, x, y):
    if ref is None:
        return math.nan, math.nan
    return ref.dist_sq(x, y)


def _prox_gap(q, step, center, point, opt):
    """Gap of ``q(u) + |u - center|^2/(2 step)`` between ``point`` and its argmin."""
    def val(u):
        d = u - center
        return q.value(u) + float(d @ d) / (2.0 * step)

    return val(point) - val(opt)


class AcceleratedGradient(BaseEstimator):
    """Nesterov momentum descent for a smooth strongly convex quadratic.

    Step size ``1/L`` and constant momentum ``(sqrt(k)-1)/(sqrt(k)+1)``.
    After :meth:`fit`, ``x_`` holds the final iterate and ``trace_`` the
    per-iteration suboptimality gap together with the certified rate bound
    ``(L + mu)/2 * |x0 - x*|^2 * exp(-k / sqrt(kappa))``.

    Parameters
    ----------
    max_iter : int
        Number of gradient steps (each costs exactly one oracle call).
    """

    def __init__(self, max_iter=100):
        self.max_iter = max_iter

    def fit(self, f, x0=None, target_eps=None, tally=None, side="g"):
        max_iter = check_count(self.max_iter, "max_iter")
        if x0 is None:
            x0 = np.zeros(f.dim)
        x0 = check_vector(x0, dim=f.dim, name="x0")
        if tally is None:
            tally = OracleTally()
        ell, mu = f.L, f.mu
        kappa = ell / mu
        eta = 1.0 / ell
        theta = (math.sqrt(kappa) - 1.0) / (math.sqrt(kappa) + 1.0)
        x_star = f.minimizer()
        f_star = f.value(x_star)
        d0_sq = float((x0 - x_star) @ (x0 - x_star))
        trace = RunTrace("agd", {
            "solver": "agd", "ell": ell, "mu": mu, "kappa": kappa,
            "eta": eta, "theta": theta, "d0_sq": d0_sq,
        })
        H, c = f.H, f.c

        def grad(u):
            if side == "h":
                tally.n_grad_h += 1
            else:
                tally.n_grad_g += 1
            return H @ u + c

        x = x0
        xt = x0
        for k in range(1, max_iter + 1):
            x_new = xt - eta * grad(xt)
            xt = x_new + theta * (x_new - x)
            x = x_new
            gap = f.value(x) - f_star
            bound = 0.5 * (ell + mu) * d0_sq * math.exp(-k / math.sqrt(kappa))
            diff = x - x_star
            trace.append(k, float(diff @ diff), math.nan, tally, bound=bound, x=x)
            trace.add_aux("gap", gap)
            if target_eps is not None and np.linalg.norm(diff) <= target_eps:
                break
        self.x_ = x
        self.x_star_ = x_star
        self.trace_ = trace
        self.tally_ = tally
        self.n_iter_ = trace.k[-1]
        return self


class AcceleratedPrimalDual(BaseEstimator):
    """Alternating exact proximal best responses with momentum extrapolation.

    One iteration performs an exact prox step in ``y`` against the
    extrapolated ``x``, an exact prox step in ``x`` against the fresh
    ``y``, and the momentum update; per iteration the oracle cost is one
    adjoint and one forward coupling call.  The certified bound contracts
    the ``mu``-weighted squared distances by
    ``theta = |A| / (sqrt(mu_x mu_y) + |A|)`` per step.

    Parameters
    ----------
    max_iter : int
        Number of outer iterations.
    """

    def __init__(self, max_iter=100):
        self.max_iter = max_iter

    def fit(self, problem, x0=None, y0=None, reference=None, target_eps=None,
            tally=None):
        max_iter = check_count(self.max_iter, "max_iter")
        p = problem
        if x0 is None:
            x0 = np.zeros(p.dx)
        if y0 is None:
            y0 = np.zeros(p.dy)
        x0 = check_vector(x0, dim=p.dx, name="x0")
        y0 = check_vector(y0, dim=p.dy, name="y0")
        if tally is None:
            tally = OracleTally()
        mu_x, mu_y = p.g.mu, p.h.mu
        a = _effective_norm(p.A.norm, mu_x, mu_y)
        gamma = math.sqrt(mu_y / mu_x) / a
        sigma = math.sqrt(mu_x / mu_y) / a
        theta = a / (math.sqrt(mu_x * mu_y) + a)
        d0x, d0y = _dist_sq(reference, x0, y0)
        W0 = mu_x * d0x + mu_y * d0y if reference is not None else math.nan
        trace = RunTrace("apfb", {
            "solver": "apfb", "mu_x": mu_x, "mu_y": mu_y, "norm_A": a,
            "gamma": gamma, "sigma": sigma, "theta": theta, "W0": W0,
        })
        x, y, xt = x0, y0, x0
        rate = a / math.sqrt(mu_x * mu_y)
        for k in range(1, max_iter + 1):
            y = prox_quadratic(p.h, sigma, y + sigma * couple(p.A, "adjoint", xt, tally))
            x_new = prox_quadratic(p.g, gamma, x - gamma * couple(p.A, "forward", y, tally))
            xt = x_new + theta * (x_new - x)
            x = x_new
            dsx, dsy = _dist_sq(reference, x, y)
            bound = theta ** (k - 1) * rate * W0
            trace.append(k, dsx, dsy, tally, bound=bound, x=x, y=y)
            if (
                target_eps is not None
                and reference is not None
                and math.sqrt(dsx) + math.sqrt(dsy) <= target_eps
            ):
                break
        self.x_ = x
        self.y_ = y
        self.trace_ = trace
        self.tally_ = tally
        self.n_iter_ = trace.k[-1]
        return self


def _require_balanced(p):
    if not p.is_balanced():
        raise Unbalanced(
            f"curvature certificates differ: x-side ({p.g.L}, {p.g.mu}) vs "
            f"y-side ({p.h.L}, {p.h.mu})"
        )
    return p.g.L, p.g.mu


class SplitProximalPoint(BaseEstimator):
    """Double-resolvent splitting for balanced problems, exact subproblems.

    The objective is split into the decoupled part ``g(x) - h(y)`` and the
    bilinear pairing; each iteration applies the exact prox of the first
    and the exact resolvent of the second at step ``alpha = 1/sqrt(L mu)``.
    The shifted sequence ``z_k = x_{k-1} - a A y_{k-1}``,
    ``w_k = y_{k-1} + a A' x_{k-1}`` contracts toward its fixed point with
    per-step factor ``eta = ((sqrt(k)-1)/(sqrt(k)+1))^2``.

    Requires equal certificates on both sides (raises ``Unbalanced``).
    """

    def __init__(self, max_iter=100):
        self.max_iter = max_iter

    def fit(self, problem, x0=None, y0=None, reference=None, target_eps=None,
            tally=None):
        max_iter = check_count(self.max_iter, "max_iter")
        p = problem
        L, mu = _require_balanced(p)
        if x0 is None:
            x0 = np.zeros(p.dx)
        if y0 is None:
            y0 = np.zeros(p.dy)
        x0 = check_vector(x0, dim=p.dx, name="x0")
        y0 = check_vector(y0, dim=p.dy, name="y0")
        if tally is None:
            tally = OracleTally()
        kappa = L / mu
        alpha = 1.0 / math.sqrt(L * mu)
        eta = ((math.sqrt(kappa) - 1.0) / (math.sqrt(kappa) + 1.0)) ** 2
        A = p.A
        d0x, d0y = _dist_sq(reference, x0, y0)
        C0 = d0x + d0y if reference is not None else math.nan
        trace = RunTrace("dppa", {
            "solver": "dppa", "L": L, "mu": mu, "kappa": kappa, "alpha": alpha,
            "eta": eta, "norm_A": A.norm, "C0": C0,
        })
        if reference is not None:
            z_star = reference.x_star - alpha * (A.A @ reference.y_star)
            w_star = reference.y_star + alpha * (A.A.T @ reference.x_star)

        def shifted_dists(xc, yc):
            # certification arithmetic, not tallied
            z = xc - alpha * (A.A @ yc)
            w = yc + alpha * (A.A.T @ xc)
            dz = z - z_star
            dw = w - w_star
            return float(dz @ dz), float(dw @ dw)

        x, y = x0, y0
        for k in range(1, max_iter + 1):
            z = x - alpha * couple(A, "forward", y, tally)
            w = y + alpha * couple(A, "adjoint", x, tally)
            if reference is not None:
                dz = z - z_star
                dw = w - w_star
                trace.add_aux("z_dist_sq", float(dz @ dz))
                trace.add_aux("w_dist_sq", float(dw @ dw))
            xt, yt = prox_separable(alpha, p.g, p.h, z, w)
            if reference is not None:
                lhs = 2.0 * xt - z - 2.0 * reference.x_star + z_star
                trace.add_aux("remark_lhs_sq", float(lhs @ lhs))
            x, y = prox_skew(alpha, A, 2.0 * xt - z, 2.0 * yt - w)
            dsx, dsy = _dist_sq(reference, x, y)
            bound = (1.0 + A.norm**2 / (L * mu)) * C0 * math.exp(-2.0 * k / math.sqrt(kappa))
            trace.append(k, dsx, dsy, tally, bound=bound, x=x, y=y)
            if (
                target_eps is not None
                and reference is not None
                and math.sqrt(dsx) + math.sqrt(dsy) <= target_eps
            ):
                break
        if reference is not None:
            dz, dw = shifted_dists(x, y)
            trace.add_aux("z_dist_sq", dz)
            trace.add_aux("w_dist_sq", dw)
        self.x_ = x
        self.y_ = y
        self.trace_ = trace
        self.tally_ = tally
        self.n_iter_ = trace.k[-1]
        return self


class InexactSplitProximalPoint(BaseEstimator):
    """Double-resolvent splitting with budgeted inner solves.

    The two decoupled proxes are replaced by ``K1`` momentum-descent steps
    each (warm-started at the previous outer iterate) and the coupled
    resolvent by ``K2`` primal-dual steps on the induced quadratic
    subproblem.  ``K1``/``K2`` and the geometric tolerance schedules come
    from :func:`inexact_prox_inner_counts` and
    :func:`inexact_prox_tolerances`; the outer squared distance is
    certified against ``C (1 - rho)^k C0`` with ``rho = 1/(2 sqrt(kappa))``
    and ``C = 4 sqrt(kappa) + 1 + |A|^2/(L mu)``.

    Parameters
    ----------
    max_iter : int
        Outer iteration budget.
    c0 : float or None
        Upper bound on the initial squared distance sum.  When ``fit``
        receives a reference saddle and ``c0`` is None, the exact value is
        used; over-estimates only loosen the schedules.
    """

    def __init__(self, max_iter=50, c0=None):
        self.max_iter = max_iter
        self.c0 = c0

    def fit(self, problem, x0=None, y0=None, reference=None, target_eps=None,
            tally=None):
        max_iter = check_count(self.max_iter, "max_iter")
        p = problem
        L, mu = _require_balanced(p)
        if x0 is None:
            x0 = np.zeros(p.dx)
        if y0 is None:
            y0 = np.zeros(p.dy)
        x0 = check_vector(x0, dim=p.dx, name="x0")
        y0 = check_vector(y0, dim=p.dy, name="y0")
        if tally is None:
            tally = OracleTally()
        if self.c0 is not None:
            C0 = float(self.c0)
        elif reference is not None:
            d0x, d0y = reference.dist_sq(x0, y0)
            C0 = d0x + d0y
        else:
            raise BadC0("need either c0 or a reference saddle to size the schedules")
        if C0 <= 0:
            C0 = 1e-300  # exactly at the saddle; keep schedules defined
        kappa = L / mu
        alpha = 1.0 / math.sqrt(L * mu)
        rho = 1.0 / (2.0 * math.sqrt(kappa))
        norm_A = p.A.norm
        C = 4.0 * math.sqrt(kappa) + 1.0 + norm_A**2 / (L * mu)
        K1, K2 = inexact_prox_inner_counts(kappa, norm_A, L, mu, rho, C)
        # primal-dual parameters for the coupled subproblem, both curvatures 1/alpha
        mu_sub = 1.0 / alpha
        a_eff = _effective_norm(norm_A, mu_sub, mu_sub)
        gamma_s = 1.0 / a_eff
        theta_s = a_eff / (mu_sub + a_eff)
        A = p.A.A
        Hg, cg = p.g.H, p.g.c
        Hh, ch = p.h.H, p.h.c
        trace = RunTrace("dippa", {
            "solver": "dippa", "L": L, "mu": mu, "kappa": kappa, "alpha": alpha,
            "rho": rho, "C": C, "C0": C0, "K1": K1, "K2": K2, "norm_A": norm_A,
        })
        x, y = x0, y0
        certify = reference is not None
        for k in range(1, max_iter + 1):
            eps_k, delta_k = inexact_prox_tolerances(k, kappa, L, mu, norm_A, C0)
            z = x - alpha * couple(p.A, "forward", y, tally)
            w = y + alpha * couple(p.A, "adjoint", x, tally)

            def grad_primal(u):
                tally.n_grad_g += 1
                return Hg @ u + cg + (u - z) / alpha

            def grad_dual(u):
                tally.n_grad_h += 1
                return Hh @ u + ch + (u - w) / alpha

            xt = _agd_run(grad_primal, x, L + 1.0 / alpha, mu + 1.0 / alpha, K1)
            yt = _agd_run(grad_dual, y, L + 1.0 / alpha, mu + 1.0 / alpha, K1)
            ax = 2.0 * xt - z
            ay = 2.0 * yt - w
            # K2 primal-dual steps on the coupled quadratic subproblem; its
            # proxes are scalar averages, so only coupling calls are tallied
            px, py, pxt = x, y, x
            for _ in range(K2):
                cy = py + gamma_s * couple(p.A, "adjoint", pxt, tally)
                py = (alpha * cy + gamma_s * ay) / (alpha + gamma_s)
                cx = px - gamma_s * couple(p.A, "forward", py, tally)
                px_new = (alpha * cx + gamma_s * ax) / (alpha + gamma_s)
                pxt = px_new + theta_s * (px_new - px)
                px = px_new
            x, y = px, py
            dsx, dsy = _dist_sq(reference, x, y)
            bound = C * (1.0 - rho) ** k * C0
            trace.append(k, dsx, dsy, tally, bound=bound, eps=eps_k, delta=delta_k,
                         x=x, y=y)
            if certify:
                xt_star = prox_quadratic(p.g, alpha, z)
                yt_star = prox_quadratic(p.h, alpha, w)
                trace.add_aux("primal_gap", _prox_gap(p.g, alpha, z, xt, xt_star))
                trace.add_aux("dual_gap", _prox_gap(p.h, alpha, w, yt, yt_star))
                xs, ys_ = prox_skew(alpha, p.A, ax, ay)
                trace.add_aux(
                    "sub_dist_sq",
                    float((x - xs) @ (x - xs)) + float((y - ys_) @ (y - ys_)),
                )
            if (
                target_eps is not None
                and reference is not None
                and math.sqrt(dsx) + math.sqrt(dsy) <= target_eps
            ):
                break
        self.x_ = x
        self.y_ = y
        self.trace_ = trace
        self.tally_ = tally
        self.n_iter_ = trace.k[-1]
        return self


class InexactAcceleratedPrimalDual(BaseEstimator):
    """Alternating primal-dual method with momentum and inexact prox steps.

    Each exact prox of the primal-dual method is replaced by a fixed-length
    momentum-descent run warm-started at the previous iterate: ``K1`` steps
    on the ``y`` subproblem and ``K2`` on the ``x`` subproblem, whose
    effective condition numbers are ``(kappa_y + kt)/(1 + kt)`` and
    ``(kappa_x + kt)/(1 + kt)`` with ``kt = |A|/sqrt(mu_x mu_y)``.  The
    outer ``mu``-weighted squared distance is certified against
    ``C (1 - rho)^T C0`` (valid from the second iteration on), with
    ``rho = sqrt(mu_x mu_y) / (2 sqrt(mu_x mu_y) + 4 |A|)`` and
    ``C = |A|/sqrt(mu_x mu_y) + 1``.

    Parameters
    ----------
    max_iter : int
        Outer iteration budget.
    c0 : float or None
        Upper bound on ``mu_x |x0-x*|^2 + mu_y |y0-y*|^2``; computed from
        the reference when omitted.
    """

    def __init__(self, max_iter=50, c0=None):
        self.max_iter = max_iter
        self.c0 = c0

    def fit(self, problem, x0=None, y0=None, reference=None, target_eps=None,
            tally=None):
        max_iter = check_count(self.max_iter, "max_iter")
        p = problem
        if x0 is None:
            x0 = np.zeros(p.dx)
        if y0 is None:
            y0 = np.zeros(p.dy)
        x0 = check_vector(x0, dim=p.dx, name="x0")
        y0 = check_vector(y0, dim=p.dy, name="y0")
        if tally is None:
            tally = OracleTally()
        mu_x, mu_y = p.g.mu, p.h.mu
        Lx, Ly = p.g.L, p.h.L
        norm_A = p.A.norm
        if self.c0 is not None:
            C0 = float(self.c0)
        elif reference is not None:
            d0x, d0y = reference.dist_sq(x0, y0)
            C0 = mu_x * d0x + mu_y * d0y
        else:
            raise BadC0("need either c0 or a reference saddle to size the schedules")
        if C0 <= 0:
            C0 = 1e-300
        theta, rho, C = accel_fb_constants(mu_x, mu_y, norm_A)
        a = _effective_norm(norm_A, mu_x, mu_y)
        gamma = math.sqrt(mu_y / mu_x) / a
        sigma = math.sqrt(mu_x / mu_y) / a
        kappa_x, kappa_y = Lx / mu_x, Ly / mu_y
        kt = norm_A / math.sqrt(mu_x * mu_y)
        base = rho * (1.0 - theta)
        K1 = agd_steps_for(
            (kappa_y + kt) / (1.0 + kt),
            320.0 * C * (1.0 - rho) * (kappa_y + 2.0 * kt + 1.0) / base,
        )
        K2 = agd_steps_for(
            (kappa_x + kt) / (1.0 + kt),
            80.0 * C * (kappa_x + 2.0 * kt + 1.0) / base,
        )
        K1, K2 = max(K1, 1), max(K2, 1)
        Hg, cg = p.g.H, p.g.c
        Hh, ch = p.h.H, p.h.c
        trace = RunTrace("aipfb", {
            "solver": "aipfb", "mu_x": mu_x, "mu_y": mu_y, "L_x": Lx, "L_y": Ly,
            "norm_A": norm_A, "gamma": gamma, "sigma": sigma, "theta": theta,
            "rho": rho, "C": C, "C0": C0, "K1": K1, "K2": K2,
        })
        certify = reference is not None
        x, y, xt = x0, y0, x0
        for k in range(1, max_iter + 1):
            eps_k = accel_fb_tolerance(k, mu_x, mu_y, norm_A, C0)
            cy = y + sigma * couple(p.A, "adjoint", xt, tally)

            def grad_dual(u):
                tally.n_grad_h += 1
                return Hh @ u + ch + (u - cy) / sigma

            y = _agd_run(grad_dual, y, Ly + 1.0 / sigma, mu_y + 1.0 / sigma, K1)
            cx = x - gamma * couple(p.A, "forward", y, tally)

            def grad_primal(u):
                tally.n_grad_g += 1
                return Hg @ u + cg + (u - cx) / gamma

            x_new = _agd_run(grad_primal, x, Lx + 1.0 / gamma, mu_x + 1.0 / gamma, K2)
            xt = x_new + theta * (x_new - x)
            x = x_new
            dsx, dsy = _dist_sq(reference, x, y)
            bound = C * (1.0 - rho) ** k * C0
            trace.append(k, dsx, dsy, tally, bound=bound, eps=eps_k, x=x, y=y)
            if certify:
                y_opt = prox_quadratic(p.h, sigma, cy)
                x_opt = prox_quadratic(p.g, gamma, cx)
                trace.add_aux("dual_gap", _prox_gap(p.h, sigma, cy, y, y_opt))
                trace.add_aux("primal_gap", _prox_gap(p.g, gamma, cx, x, x_opt))
            if (
                target_eps is not None
                and reference is not None
                and math.sqrt(dsx) + math.sqrt(dsy) <= target_eps
            ):
                break
        self.x_ = x
        self.y_ = y
        self.trace_ = trace
        self.tally_ = tally
        self.n_iter_ = trace.k[-1]
        return self
