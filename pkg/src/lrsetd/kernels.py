"""Matrix kernels used by the ADMM updates.

Singular value shrinkage, elementwise soft thresholding, SPD solves,
spectral norms, and the first-order difference (Toeplitz) regularizer.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "SvdFactors",
    "svd_reduced",
    "svd_shrink",
    "soft_shrink",
    "spd_solve",
    "spd_factorize",
    "spectral_norm",
    "toeplitz_diff",
]


@dataclass(frozen=True)
class SvdFactors:
    """Reduced SVD: ``u @ diag(singular_values) @ v.T`` rebuilds the input."""

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray


def svd_reduced(m):
    """Reduced SVD of a matrix with finite entries."""
    m = np.asarray(m, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError("svd_reduced: input has non-finite entries")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return SvdFactors(u=u, singular_values=s, v=vt.T)


def svd_shrink(m, tau):
    """Singular value shrinkage: prox of ``tau * ||.||_*`` at `m`.

    Unique minimizer of ``tau*||Y||_* + 0.5*||Y - m||_F^2``.
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    f = svd_reduced(m)
    s = np.maximum(f.singular_values - tau, 0.0)
    keep = s > 0
    if not keep.any():
        return np.zeros_like(np.asarray(m, dtype=np.float64))
    return (f.u[:, keep] * s[keep]) @ f.v[:, keep].T


def soft_shrink(m, tau):
    """Elementwise soft threshold: prox of ``tau * ||.||_1`` at `m`.

    Works on arrays of any shape.
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    m = np.asarray(m, dtype=np.float64)
    return np.sign(m) * np.maximum(np.abs(m) - tau, 0.0)


def spd_factorize(a):
    """Cholesky-factor a symmetric positive definite matrix.

    Returns a callable ``solve(b) -> x`` with ``a @ x = b``. Raises
    ``np.linalg.LinAlgError`` when `a` is not SPD.
    """
    a = np.asarray(a, dtype=np.float64)
    try:
        c, lower = scipy.linalg.cho_factor(a)
    except scipy.linalg.LinAlgError as e:
        raise np.linalg.LinAlgError(f"matrix is not SPD: {e}") from e

    def solve(b):
        return scipy.linalg.cho_solve((c, lower), np.asarray(b, dtype=np.float64))

    return solve


def spd_solve(a, b):
    """Solve ``a @ x = b`` for symmetric positive definite `a`."""
    return spd_factorize(a)(b)


def spectral_norm(m, tol=1e-10, max_iter=500):
    """Largest singular value of `m`.

    Power iteration on the smaller Gram matrix; on stagnation falls back to
    a full SVD inflated by (1 + 1e-6) so the estimate never undershoots a
    Lipschitz constant.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0:
        return 0.0
    g = m @ m.T if m.shape[0] <= m.shape[1] else m.T @ m
    n = g.shape[0]
    if n == 1:
        return float(np.sqrt(max(g[0, 0], 0.0)))
    # deterministic start; the ramp breaks symmetry for e.g. permutations
    v = 1.0 + np.arange(n) / n
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = g @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        lam_new = float(v @ (g @ v))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return float(np.sqrt(max(lam_new, 0.0)))
        lam = lam_new
    return float(np.linalg.svd(m, compute_uv=False)[0]) * (1.0 + 1e-6)


def toeplitz_diff(n):
    """n-by-n first-order difference matrix.

    Ones on the diagonal, -1 on the first superdiagonal, zeros elsewhere;
    ``(A @ v)[j] = v[j] - v[j+1]`` for j < n-1 and ``v[n-1]`` at the end.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return np.eye(n) - np.eye(n, k=1)
