"""Exact proximal operators: quadratic prox, separable prox, skew resolvent.

Factorizations are cached per (object, step) pair because the solvers reuse
a fixed step on every outer iteration.  Caches are write-once per key and
therefore safe to share between threads.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .validation import check_positive, check_vector


def _quadratic_factor(q, gamma):
    factor = q._prox_factors.get(gamma)
    if factor is None:
        shifted = q.H + np.eye(q.dim) / gamma
        factor = cho_factor(shifted, lower=True, check_finite=False)
        q._prox_factors[gamma] = factor
    return factor


def prox_quadratic(q, gamma, z):
    """``argmin_u q(u) + |u - z|^2 / (2 gamma)`` for a quadratic ``q``.

    Closed form ``(H + I/gamma)^{-1} (z/gamma - c)`` via a cached Cholesky
    factor.
    """
    gamma = check_positive(gamma, "gamma")
    z = check_vector(z, dim=q.dim, name="z")
    return cho_solve(_quadratic_factor(q, gamma), z / gamma - q.c, check_finite=False)


def prox_separable(alpha, g, h, z, w):
    """Joint prox of the decoupled min-max part.

    The minimization over ``x`` and the maximization over ``y`` split: the
    ``y`` block maximizes ``-h``, i.e. minimizes ``h``, so both coordinates
    reduce to plain quadratic proxes with the same step.
    """
    return prox_quadratic(g, alpha, z), prox_quadratic(h, alpha, w)


def _skew_factor(coupling, alpha):
    key = alpha
    entry = coupling._skew_factors.get(key)
    if entry is None:
        A = coupling.A
        dx, dy = A.shape
        if dy <= dx:
            M = np.eye(dy) + alpha**2 * (A.T @ A)
        else:
            M = np.eye(dx) + alpha**2 * (A @ A.T)
        M = (M + M.T) / 2.0
        entry = cho_factor(M, lower=True, check_finite=False)
        coupling._skew_factors[key] = entry
    return entry


def prox_skew(alpha, coupling, u, v):
    """Resolvent of the bilinear pairing: solve ``x + aAy = u, y - aA'x = v``.

    Eliminating one block leaves an SPD normal system on the smaller side,
    so the cost is a single cached Cholesky solve.  ``alpha = 0`` is the
    identity.
    """
    alpha = float(alpha)
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    A = coupling.A
    dx, dy = A.shape
    u = check_vector(u, dim=dx, name="u")
    v = check_vector(v, dim=dy, name="v")
    if alpha == 0.0:
        return u.copy(), v.copy()
    factor = _skew_factor(coupling, alpha)
    if dy <= dx:
        y = cho_solve(factor, v + alpha * (A.T @ u), check_finite=False)
        x = u - alpha * (A @ y)
    else:
        x = cho_solve(factor, u - alpha * (A @ v), check_finite=False)
        y = v + alpha * (A.T @ x)
    return x, y
