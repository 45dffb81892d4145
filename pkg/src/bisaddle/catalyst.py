"""Outer acceleration for unbalanced problems via regularized envelopes.

An unbalanced problem (``kappa_x != kappa_y``) is solved as a sequence of
balanced subproblems: add ``beta/2 |x - center|^2`` to the x-side with
``beta`` chosen so the regularized condition number equals ``kappa_y``,
rescale the x variable to equalize the smoothness constants, solve the
subproblem inexactly with one of the balanced solvers, and extrapolate the
centers with momentum ``(1 - sqrt(q))/(1 + sqrt(q))``, ``q = mu_x/(mu_x+beta)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .errors import BadC0, BadOrdering, NotRescaled
from .problem import (
    CouplingOperator,
    OracleTally,
    QuadraticFunction,
    SaddleProblem,
    SaddleReference,
    reference_saddle,
)
from .solvers import (
    InexactAcceleratedPrimalDual,
    InexactSplitProximalPoint,
    RunTrace,
    accel_fb_constants,
)
from .validation import check_count, check_vector

_EPS_RATIO_WEIGHT = 0.9  # schedule ratio 1 - 0.9 sqrt(q), inside (1 - sqrt(q), 1)


@dataclass
class CatalystParams:
    """Envelope weight and outer momentum constants."""

    beta: float
    q: float
    theta: float


def catalyst_params(L_x, mu_x, mu_y, rtol=1e-12):
    """Envelope weight balancing the regularized problem.

    With ``beta = L_x (mu_y - mu_x) / (L_x - mu_y)`` the x-side condition
    number of the envelope equals ``kappa_y``.  Requires
    ``mu_x <= mu_y < L_x``; equal strong convexities degenerate to
    ``beta = 0`` (a single inner-solver call).
    """
    L_x, mu_x, mu_y = float(L_x), float(mu_x), float(mu_y)
    if mu_x > mu_y * (1.0 + rtol):
        raise BadOrdering(f"need mu_x <= mu_y, got mu_x={mu_x}, mu_y={mu_y}")
    if abs(mu_x - mu_y) <= rtol * max(mu_x, mu_y):
        return CatalystParams(beta=0.0, q=1.0, theta=0.0)
    if mu_y >= L_x:
        raise BadOrdering(f"need mu_y < L_x, got mu_y={mu_y}, L_x={L_x}")
    beta = L_x * (mu_y - mu_x) / (L_x - mu_y)
    q = mu_x / (mu_x + beta)
    theta = (1.0 - math.sqrt(q)) / (1.0 + math.sqrt(q))
    return CatalystParams(beta=beta, q=q, theta=theta)


def catalyst_envelope(p, beta, center):
    """Add ``beta/2 |x - center|^2`` to the x-side objective.

    The y-side function and the coupling operator are shared with the
    input problem, not copied.  ``beta = 0`` returns the problem unchanged.
    """
    if beta == 0.0:
        return p
    center = check_vector(center, dim=p.dx, name="center")
    g = p.g
    g_env = QuadraticFunction(
        g.H + beta * np.eye(g.dim),
        g.c - beta * center,
        L=g.L + beta,
        mu=g.mu + beta,
    )
    return SaddleProblem(g_env, p.h, p.A)


def rescale_envelope(p_env, L_x, beta):
    """Substitute ``x -> scale * x`` so the envelope smoothness drops to ``L_x``.

    ``scale = sqrt(L_x / (L_x + beta))``; x-iterates of the rescaled
    problem map back via ``x <- scale * x`` and the coupling norm shrinks
    by the same factor.  Together with :func:`catalyst_params` this makes
    the subproblem fully balanced: both sides end up with smoothness
    ``L_x`` and strong convexity ``L_x / kappa_y``.
    """
    if beta == 0.0:
        return p_env, 1.0
    scale = math.sqrt(L_x / (L_x + beta))
    g = p_env.g
    g_scaled = QuadraticFunction(
        scale**2 * g.H,
        scale * g.c,
        L=L_x,
        mu=scale**2 * g.mu,
    )
    A_scaled = CouplingOperator(scale * p_env.A.A, norm=scale * p_env.A.norm)
    return SaddleProblem(g_scaled, p_env.h, A_scaled), scale


def swap_roles(p):
    """Transpose the game so the weaker strong convexity sits on the x side.

    ``min_x max_y g + <x, Ay> - h`` maps to ``min_u max_v h + <u, A'v> - g``
    with ``A' = -A^T``; the saddle point swaps coordinates accordingly.
    """
    return SaddleProblem(p.h, p.g, CouplingOperator(-p.A.A.T, norm=p.A.norm))


def _swap_reference(ref):
    return SaddleReference(ref.y_star, ref.x_star, ref.residual)


class _CatalystSolver(BaseEstimator):
    """Shared outer loop; subclasses pick the inner balanced solver."""

    _solver_name = ""

    def __init__(self, max_iter=25, eps0=None):
        self.max_iter = max_iter
        self.eps0 = eps0

    def _inner_budget(self, sub_problem, c0_sub, eps_k):
        raise NotImplementedError

    def _make_inner(self, max_iter, c0_plain, sub_problem):
        raise NotImplementedError

    def fit(self, problem, x0=None, y0=None, reference=None, target_eps=None,
            tally=None):
        max_iter = check_count(self.max_iter, "max_iter")
        p = problem
        if abs(p.g.L - p.h.L) > 1e-12 * max(p.g.L, p.h.L):
            raise NotRescaled(
                f"smoothness constants differ ({p.g.L} vs {p.h.L}); "
                "apply rescale_to_equal_smoothness first"
            )
        swapped = p.g.mu > p.h.mu * (1.0 + 1e-12)
        if swapped:
            p = swap_roles(p)
            x0, y0 = y0, x0
            reference = _swap_reference(reference) if reference is not None else None
        if x0 is None:
            x0 = np.zeros(p.dx)
        if y0 is None:
            y0 = np.zeros(p.dy)
        x0 = check_vector(x0, dim=p.dx, name="x0")
        y0 = check_vector(y0, dim=p.dy, name="y0")
        if tally is None:
            tally = OracleTally()
        L = p.g.L
        params = catalyst_params(L, p.g.mu, p.h.mu)
        if self.eps0 is not None:
            eps0 = float(self.eps0)
        elif reference is not None:
            d0x, d0y = reference.dist_sq(x0, y0)
            eps0 = d0x + d0y
        else:
            raise BadC0("need either eps0 or a reference saddle for the schedule")
        if eps0 <= 0:
            eps0 = 1e-300
        ratio = 1.0 - _EPS_RATIO_WEIGHT * math.sqrt(params.q)
        scale = 1.0 if params.beta == 0.0 else math.sqrt(L / (L + params.beta))
        trace = RunTrace(self._solver_name, {
            "solver": self._solver_name, "L": L, "mu_x": p.g.mu, "mu_y": p.h.mu,
            "beta": params.beta, "q": params.q, "theta": params.theta,
            "eps0": eps0, "ratio": ratio, "scale": scale, "swapped": int(swapped),
            "degenerate": int(params.beta == 0.0),
        })

        if params.beta == 0.0:
            # degenerate wrap: the envelope is the problem itself, so the
            # whole schedule collapses into one inner call at the final
            # tolerance
            eps_target = eps0 * ratio**max_iter
            c0_plain = eps0 if reference is None else None
            inner_iters = self._inner_budget(p, eps0, eps_target)
            inner = self._make_inner(inner_iters, c0_plain, p)
            inner.fit(p, x0=x0, y0=y0, reference=reference, tally=tally,
                      target_eps=target_eps)
            x, y = inner.x_, inner.y_
            dsx, dsy = (math.nan, math.nan) if reference is None else reference.dist_sq(x, y)
            trace.append(1, dsx, dsy, tally, eps=eps_target, x=x, y=y)
            if reference is not None:
                trace.add_aux("sub_dist_sq", dsx + dsy)
            trace.add_aux("inner_iters", inner.n_iter_)
            trace.params["inner_max_iter"] = inner_iters
            trace.params["inner_c0"] = inner.trace_.params["C0"]
            self.inner_ = inner
        else:
            x, y = x0, y0
            xt = x0
            eps_prev = eps0
            center_prev = None
            for k in range(1, max_iter + 1):
                eps_k = eps0 * ratio**k
                center = xt
                env = catalyst_envelope(p, params.beta, center)
                env_r, _ = rescale_envelope(env, L, params.beta)
                sub_ref = reference_saddle(env_r) if reference is not None else None
                if sub_ref is not None:
                    d0x, d0y = sub_ref.dist_sq(x / scale, y)
                    c0_sub = d0x + d0y
                    c0_plain = None
                else:
                    # conservative triangle-inequality bound on the warm-start
                    # distance when no reference oracle is available
                    shift = 0.0 if center_prev is None else float(
                        (center - center_prev) @ (center - center_prev)
                    )
                    c0_sub = (2.0 * eps_prev + 2.0 * shift) / scale**2
                    c0_plain = c0_sub
                inner_iters = self._inner_budget(env_r, c0_sub, eps_k)
                inner = self._make_inner(inner_iters, c0_plain, env_r)
                inner.fit(env_r, x0=x / scale, y0=y, reference=sub_ref, tally=tally)
                x_prev = x
                x = scale * inner.x_
                y = inner.y_
                xt = x + params.theta * (x - x_prev)
                dsx, dsy = (math.nan, math.nan) if reference is None else reference.dist_sq(x, y)
                trace.append(k, dsx, dsy, tally, eps=eps_k, x=x, y=y)
                if sub_ref is not None:
                    sx, sy = sub_ref.dist_sq(inner.x_, inner.y_)
                    trace.add_aux("sub_dist_sq", sx + sy)
                trace.add_aux("inner_iters", inner.n_iter_)
                eps_prev = eps_k
                center_prev = center
                if (
                    target_eps is not None
                    and reference is not None
                    and math.sqrt(dsx) + math.sqrt(dsy) <= target_eps
                ):
                    break
        if swapped:
            x, y = y, x
        self.x_ = x
        self.y_ = y
        self.params_ = params
        self.trace_ = trace
        self.tally_ = tally
        self.n_iter_ = trace.k[-1]
        return self


class CatalystSplitProximalPoint(_CatalystSolver):
    """Catalyst outer loop around the inexact double-resolvent solver.

    Parameters
    ----------
    max_iter : int
        Outer iteration budget.
    eps0 : float or None
        Initial squared-distance tolerance; taken from the reference saddle
        when omitted.
    """

    _solver_name = "catalyst-dippa"

    def _inner_budget(self, sub_problem, c0_sub, eps_k):
        L, mu = sub_problem.g.L, sub_problem.g.mu
        kappa = L / mu
        rho = 1.0 / (2.0 * math.sqrt(kappa))
        C = 4.0 * math.sqrt(kappa) + 1.0 + sub_problem.A.norm**2 / (L * mu)
        if C * c0_sub <= eps_k:
            return 1
        return max(1, math.ceil(math.log(C * c0_sub / eps_k) / -math.log1p(-rho)))

    def _make_inner(self, max_iter, c0_plain, sub_problem):
        return InexactSplitProximalPoint(max_iter=max_iter, c0=c0_plain)


class CatalystAcceleratedPrimalDual(_CatalystSolver):
    """Catalyst outer loop around the inexact primal-dual solver.

    Same envelope and schedule as the double-resolvent variant.  The inner
    budget comes from the weighted-distance bound of the inner method; the
    subproblems are fully balanced, so weighted and plain squared distances
    differ exactly by the common strong-convexity factor and the budget
    inversion is the same ratio.
    """

    _solver_name = "catalyst-aipfb"

    def _inner_budget(self, sub_problem, c0_sub, eps_k):
        _, rho, C = accel_fb_constants(
            sub_problem.g.mu, sub_problem.h.mu, sub_problem.A.norm
        )
        if C * c0_sub <= eps_k:
            return 2
        return max(2, math.ceil(math.log(C * c0_sub / eps_k) / -math.log1p(-rho)))

    def _make_inner(self, max_iter, c0_plain, sub_problem):
        c0 = None if c0_plain is None else sub_problem.g.mu * c0_plain
        return InexactAcceleratedPrimalDual(max_iter=max_iter, c0=c0)
