"""Dense linear algebra kernels: SPD solves, spectral norms, seeded generators.

Everything here is a pure function of its arguments; the random generators
are deterministic functions of ``(seed, shape, params)`` within one build.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import BadSpectrum, DimensionMismatch, NonFinite, NotSPD
from .validation import check_matrix, check_vector

_POWER_START_SEED = 1905
_SYM_RTOL = 1e-10


def _check_symmetric(M, name="matrix"):
    scale = 1.0 + np.abs(M).max(initial=0.0)
    if np.abs(M - M.T).max(initial=0.0) > _SYM_RTOL * scale:
        raise NotSPD(f"{name} is not symmetric within {_SYM_RTOL} relative")


def solve_spd(M, b):
    """Solve ``M u = b`` for symmetric positive definite ``M``.

    Uses a Cholesky factorization followed by one step of iterative
    refinement, which keeps the residual near machine precision for the
    moderately conditioned systems this library produces.
    """
    M = check_matrix(M, name="M")
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"M must be square, got {M.shape}")
    b = check_vector(b, dim=M.shape[0], name="b")
    _check_symmetric(M, name="M")
    try:
        factor = cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotSPD("Cholesky factorization hit a nonpositive pivot") from exc
    u = cho_solve(factor, b, check_finite=False)
    u += cho_solve(factor, b - M @ u, check_finite=False)
    return u


def spectral_norm(A, tol=1e-10):
    """Largest singular value of a dense matrix.

    Power iteration on the Gram matrix of the smaller side, with a
    convergence test on successive Rayleigh quotients, capped at ``10 * d``
    iterations and finished by one refinement pass.  The returned value
    satisfies ``|s - sigma_max| <= tol * sigma_max`` for inputs whose top
    singular values are not pathologically clustered.
    """
    A = check_matrix(A, name="A")
    if not np.isfinite(A).all():
        raise NonFinite("A contains non-finite entries")
    if float(tol) <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if not A.any():
        return 0.0
    if A.shape[0] < A.shape[1]:
        A = A.T
    d = A.shape[1]
    B = A.T @ A
    v = np.random.default_rng(_POWER_START_SEED).standard_normal(d)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(10 * d):
        u = B @ v
        lam_new = float(v @ u)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        v = u / nu
        if abs(lam_new - lam) <= 0.5 * tol * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    lam = float(v @ (B @ v))
    return float(np.sqrt(lam))


def random_spd_with_spectrum(seed, d, mu, L):
    """Random SPD matrix with eigenvalues pinned exactly to ``[mu, L]``.

    The extremes of the spectrum are ``mu`` and ``L`` by construction and
    the interior eigenvalues are log-uniform between them, so the condition
    number of the result is ``L / mu`` exactly.  The orthogonal basis is a
    deterministic function of ``seed``.
    """
    if d < 1 or int(d) != d:
        raise DimensionMismatch(f"d must be a positive integer, got {d}")
    d = int(d)
    mu, L = float(mu), float(L)
    if not (0 < mu <= L) or not np.isfinite(L):
        raise BadSpectrum(f"need 0 < mu <= L, got mu={mu}, L={L}")
    if d == 1:
        if mu != L:
            raise BadSpectrum("a 1x1 matrix has a single eigenvalue; need mu == L")
        return np.array([[L]])
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    if mu == L:
        lam = np.full(d, mu)
    else:
        interior = np.exp(rng.uniform(np.log(mu), np.log(L), size=d - 2))
        lam = np.concatenate(([mu], interior, [L]))
    H = (q * lam) @ q.T
    return (H + H.T) / 2.0


def random_coupling(seed, dx, dy, s):
    """Random dense ``dx x dy`` matrix rescaled to spectral norm ``s``."""
    if dx < 1 or dy < 1 or int(dx) != dx or int(dy) != dy:
        raise DimensionMismatch(f"dimensions must be positive integers, got {dx}x{dy}")
    s = float(s)
    if s < 0:
        raise ValueError(f"target norm must be nonnegative, got {s}")
    if s == 0.0:
        return np.zeros((int(dx), int(dy)))
    M = np.random.default_rng(seed).standard_normal((int(dx), int(dy)))
    return (s / spectral_norm(M, tol=1e-12)) * M
