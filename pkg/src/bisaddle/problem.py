"""Problem model for bilinear strongly-convex-concave saddle objectives.

The objective is ``f(x, y) = g(x) + <x, A y> - h(y)`` with quadratic ``g``
and ``h``.  Restricting to quadratics keeps every proximal step and the
saddle point itself exactly computable, which is what lets the runtime
monitors certify convergence bounds instead of eyeballing them.  Solvers
only ever touch the gradient/prox interface, so they stay generic.
"""

import json

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    DimensionMismatch,
    NonFinite,
    NotSPD,
    SingularSystem,
)
from .linalg import random_coupling, random_spd_with_spectrum, spectral_norm
from .validation import check_matrix, check_positive, check_vector

_CERT_RTOL = 1e-8
_NORM_RTOL = 1e-8
_KKT_RTOL = 1e-9

PROBLEM_SPEC_KEYS = ("seed", "dx", "dy", "Lx", "Ly", "mux", "muy", "normA")


class QuadraticFunction:
    """Quadratic ``v -> 1/2 v'Hv + c'v`` carrying curvature certificates.

    Parameters
    ----------
    H : array, shape (d, d)
        Symmetric positive definite curvature matrix.
    c : array, shape (d,)
        Linear term.
    L, mu : float
        Smoothness and strong-convexity certificates.  Every step-size
        formula downstream trusts these, so the constructor checks that the
        spectrum of ``H`` actually lies in ``[mu, L]``.
    """

    def __init__(self, H, c, L, mu):
        H = check_matrix(H, name="H")
        if H.shape[0] != H.shape[1]:
            raise DimensionMismatch(f"H must be square, got {H.shape}")
        c = check_vector(c, dim=H.shape[0], name="c")
        L = check_positive(L, "L")
        mu = check_positive(mu, "mu")
        if mu > L:
            raise NotSPD(f"need mu <= L, got mu={mu}, L={L}")
        scale = 1.0 + np.abs(H).max(initial=0.0)
        if np.abs(H - H.T).max(initial=0.0) > 1e-10 * scale:
            raise NotSPD("H is not symmetric")
        eigs = np.linalg.eigvalsh(H)
        slack = _CERT_RTOL * L + 1e-12
        if eigs[0] < mu - slack or eigs[-1] > L + slack:
            raise NotSPD(
                f"spectrum [{eigs[0]:.6g}, {eigs[-1]:.6g}] escapes the certified "
                f"range [{mu:.6g}, {L:.6g}]"
            )
        self.H = H
        self.c = c
        self.L = L
        self.mu = mu
        self._prox_factors = {}

    @property
    def dim(self):
        return self.H.shape[0]

    @property
    def kappa(self):
        return self.L / self.mu

    def value(self, v):
        return 0.5 * float(v @ (self.H @ v)) + float(self.c @ v)

    def grad(self, v):
        """Raw gradient; use :func:`gradient` when the call must be tallied."""
        return self.H @ v + self.c

    def minimizer(self):
        """Exact unconstrained minimizer ``-H^{-1} c``."""
        factor = cho_factor(self.H, lower=True, check_finite=False)
        u = cho_solve(factor, -self.c, check_finite=False)
        u += cho_solve(factor, -self.c - self.H @ u, check_finite=False)
        return u


class CouplingOperator:
    """Dense coupling matrix with a cached spectral norm."""

    def __init__(self, A, norm=None):
        A = check_matrix(A, name="A")
        if norm is None:
            norm = spectral_norm(A, tol=1e-9)
        else:
            norm = float(norm)
            measured = spectral_norm(A, tol=1e-9)
            if abs(norm - measured) > _NORM_RTOL * max(measured, 1e-300):
                raise NonFinite(
                    f"cached norm {norm} disagrees with measured {measured}"
                )
        self.A = A
        self.norm = norm
        self._skew_factors = {}

    @property
    def shape(self):
        return self.A.shape


class OracleTally:
    """Counters for the four first-order oracle components.

    One tally per solver run; never share a tally across threads.
    """

    __slots__ = ("n_grad_g", "n_grad_h", "n_Ay", "n_ATx")

    def __init__(self):
        self.n_grad_g = 0
        self.n_grad_h = 0
        self.n_Ay = 0
        self.n_ATx = 0

    @property
    def total(self):
        return self.n_grad_g + self.n_grad_h + self.n_Ay + self.n_ATx

    def snapshot(self):
        return (self.n_grad_g, self.n_grad_h, self.n_Ay, self.n_ATx)

    def __repr__(self):
        return (
            f"OracleTally(grad_g={self.n_grad_g}, grad_h={self.n_grad_h}, "
            f"Ay={self.n_Ay}, ATx={self.n_ATx})"
        )


class SaddleProblem:
    """Bundle ``(g, h, A)`` with derived condition numbers."""

    def __init__(self, g, h, A):
        if not isinstance(A, CouplingOperator):
            A = CouplingOperator(A)
        if A.shape != (g.dim, h.dim):
            raise DimensionMismatch(
                f"A has shape {A.shape}, expected ({g.dim}, {h.dim})"
            )
        self.g = g
        self.h = h
        self.A = A

    @property
    def dx(self):
        return self.g.dim

    @property
    def dy(self):
        return self.h.dim

    @property
    def kappa_x(self):
        return self.g.kappa

    @property
    def kappa_y(self):
        return self.h.kappa

    @property
    def coupling_condition(self):
        return self.A.norm / np.sqrt(self.g.mu * self.h.mu)

    def value(self, x, y):
        return self.g.value(x) + float(x @ (self.A.A @ y)) - self.h.value(y)

    def is_balanced(self, rtol=1e-12):
        g, h = self.g, self.h
        return (
            abs(g.L - h.L) <= rtol * max(g.L, h.L)
            and abs(g.mu - h.mu) <= rtol * max(g.mu, h.mu)
        )


class SaddleReference:
    """Exact saddle point with its stationarity residual."""

    def __init__(self, x_star, y_star, residual):
        self.x_star = x_star
        self.y_star = y_star
        self.residual = residual

    def dist_sq(self, x, y):
        dx = x - self.x_star
        dy = y - self.y_star
        return float(dx @ dx), float(dy @ dy)


def gradient(q, v, tally=None, side="g"):
    """Tallied gradient oracle ``H v + c`` of a quadratic."""
    v = check_vector(v, dim=q.dim, name="v")
    if tally is not None:
        if side == "g":
            tally.n_grad_g += 1
        elif side == "h":
            tally.n_grad_h += 1
        else:
            raise ValueError(f"side must be 'g' or 'h', got {side!r}")
    return q.H @ v + q.c


def couple(A, direction, v, tally=None):
    """Tallied application of the coupling matrix or its adjoint."""
    if direction == "forward":
        v = check_vector(v, dim=A.shape[1], name="v")
        if tally is not None:
            tally.n_Ay += 1
        return A.A @ v
    if direction == "adjoint":
        v = check_vector(v, dim=A.shape[0], name="v")
        if tally is not None:
            tally.n_ATx += 1
        return A.A.T @ v
    raise ValueError(f"direction must be 'forward' or 'adjoint', got {direction!r}")


def reference_saddle(p):
    """Solve the stationarity system for the unique saddle point.

    The first-order conditions are ``H_g x + c_g + A y = 0`` and
    ``H_h y + c_h - A' x = 0``; eliminating ``x`` leaves one SPD system in
    ``y`` (Schur complement), so two Cholesky solves suffice.
    """
    Hg, cg = p.g.H, p.g.c
    Hh, ch = p.h.H, p.h.c
    A = p.A.A
    try:
        fac_g = cho_factor(Hg, lower=True, check_finite=False)
        HgiA = cho_solve(fac_g, A, check_finite=False)
        Hgic = cho_solve(fac_g, cg, check_finite=False)
        S = Hh + A.T @ HgiA
        S = (S + S.T) / 2.0
        fac_s = cho_factor(S, lower=True, check_finite=False)
        rhs = -ch - A.T @ Hgic
        y = cho_solve(fac_s, rhs, check_finite=False)
        y += cho_solve(fac_s, rhs - S @ y, check_finite=False)
        x = -(Hgic + HgiA @ y)
        x -= cho_solve(fac_g, Hg @ x + cg + A @ y, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("stationarity system is not SPD-reducible") from exc
    residual = float(
        np.linalg.norm(Hg @ x + cg + A @ y) + np.linalg.norm(Hh @ y + ch - A.T @ x)
    )
    scale = 1.0 + float(np.linalg.norm(x) + np.linalg.norm(y))
    if residual > _KKT_RTOL * scale:
        raise SingularSystem(
            f"saddle residual {residual:.3e} exceeds {_KKT_RTOL:.0e} * {scale:.3e}"
        )
    return SaddleReference(x, y, residual)


def rescale_to_equal_smoothness(p):
    """Substitute ``y -> scale * y`` so both sides share one smoothness constant.

    Returns the transformed problem and ``scale``; y-iterates of the new
    problem map back to the original via ``y <- scale * y``.  Condition
    numbers and the coupling condition number are preserved.
    """
    Lx, Ly = p.g.L, p.h.L
    if abs(Lx - Ly) <= 1e-12 * max(Lx, Ly):
        return p, 1.0
    scale = np.sqrt(Lx / Ly)
    h2 = QuadraticFunction(
        scale**2 * p.h.H, scale * p.h.c, L=scale**2 * Ly, mu=scale**2 * p.h.mu
    )
    A2 = CouplingOperator(scale * p.A.A, norm=scale * p.A.norm)
    return SaddleProblem(p.g, h2, A2), float(scale)


def is_eps_saddle(p, ref, x, y, eps):
    """Whether ``|x - x*| + |y - y*| <= eps``."""
    x = check_vector(x, dim=p.dx, name="x")
    y = check_vector(y, dim=p.dy, name="y")
    dist = np.linalg.norm(x - ref.x_star) + np.linalg.norm(y - ref.y_star)
    return bool(dist <= eps)


def _child_seeds(seed, n=5):
    return [int(s) for s in np.random.SeedSequence(int(seed)).generate_state(n)]


def problem_from_spec(spec):
    """Regenerate a problem instance from its JSON description.

    The description carries exactly the keys ``seed, dx, dy, Lx, Ly, mux,
    muy, normA`` and is deterministic within one build.
    """
    unknown = set(spec) - set(PROBLEM_SPEC_KEYS)
    if unknown:
        raise DimensionMismatch(f"unknown problem keys: {sorted(unknown)}")
    missing = set(PROBLEM_SPEC_KEYS) - set(spec)
    if missing:
        raise DimensionMismatch(f"missing problem keys: {sorted(missing)}")
    seed_g, seed_h, seed_a, seed_lin, _ = _child_seeds(spec["seed"])
    dx, dy = int(spec["dx"]), int(spec["dy"])
    Hg = random_spd_with_spectrum(seed_g, dx, spec["mux"], spec["Lx"])
    Hh = random_spd_with_spectrum(seed_h, dy, spec["muy"], spec["Ly"])
    A = random_coupling(seed_a, dx, dy, spec["normA"])
    rng = np.random.default_rng(seed_lin)
    cg = rng.standard_normal(dx)
    ch = rng.standard_normal(dy)
    g = QuadraticFunction(Hg, cg, L=float(spec["Lx"]), mu=float(spec["mux"]))
    h = QuadraticFunction(Hh, ch, L=float(spec["Ly"]), mu=float(spec["muy"]))
    return SaddleProblem(g, h, CouplingOperator(A))


def problem_spec_to_json(spec):
    """Canonical JSON text for a problem description."""
    ordered = {key: spec[key] for key in PROBLEM_SPEC_KEYS}
    return json.dumps(ordered, sort_keys=True)
