"""Dense symmetric linear algebra used by the solvers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack, solve_triangular


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    def __init__(self, pivot: int):
        super().__init__(f"matrix is not positive definite (leading minor {pivot} fails)")
        self.pivot = pivot


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


@dataclass(frozen=True)
class SpdFactorization:
    lower: np.ndarray

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def cholesky_factor(M) -> SpdFactorization:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    c, info = lapack.dpotrf(M, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(int(info))
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    return SpdFactorization(c)


def solve(fact: SpdFactorization, rhs) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != fact.dim:
        raise ValueError(f"rhs has length {rhs.shape[0]}, factor has dim {fact.dim}")
    y = solve_triangular(fact.lower, rhs, lower=True, check_finite=False)
    return solve_triangular(fact.lower, y, lower=True, trans="T", check_finite=False)


def cg_solve(apply, rhs, tol: float = 1e-10, maxit: int | None = None) -> np.ndarray:
    """Conjugate gradients for an SPD operator; stops on relative residual."""
    b = np.asarray(rhs, dtype=float)
    maxit = 10 * b.size if maxit is None else maxit
    x = np.zeros_like(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x
    r = b.copy()
    d = r.copy()
    rr = r @ r
    history = [np.sqrt(rr) / bnorm]
    for _ in range(maxit):
        if history[-1] <= tol:
            return x
        Ad = apply(d)
        alpha = rr / (d @ Ad)
        x += alpha * d
        r -= alpha * Ad
        rr_new = r @ r
        d = r + (rr_new / rr) * d
        rr = rr_new
        history.append(np.sqrt(rr) / bnorm)
    if history[-1] <= tol:
        return x
    raise ConvergenceError(f"CG did not reach tol {tol} in {maxit} iterations", history)


def smallest_eigenvalue_spd(M, tol: float = 1e-13, max_iter: int | None = None) -> float:
    """Smallest eigenvalue of an SPD matrix.

    Inverse iteration on the Cholesky factor, accelerated by keeping the
    whole Krylov basis of ``M^{-1}`` (Lanczos with full reorthogonalisation)
    so that clustered eigenvalues do not stall convergence.
    """
    M = np.asarray(M, dtype=float)
    fact = cholesky_factor(M)
    n = fact.dim
    if n == 1:
        return float(M[0, 0])
    max_iter = n if max_iter is None else min(max_iter, n)
    rng = np.random.default_rng(0)
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    Q = [q]
    alphas, betas = [], []
    theta_old = None
    for k in range(max_iter):
        w = solve(fact, Q[-1])
        alphas.append(Q[-1] @ w)
        basis = np.array(Q)
        for _ in range(2):
            w -= basis.T @ (basis @ w)
        beta = np.linalg.norm(w)
        T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
        evals, evecs = np.linalg.eigh(T)
        theta = evals[-1]
        # residual of the Ritz pair of M^{-1}
        resid = beta * abs(evecs[-1, -1])
        if resid <= tol * theta or k == n - 1 or beta <= tol * theta:
            return float(1.0 / theta)
        if theta_old is not None and abs(theta - theta_old) <= 1e-16 * theta and resid <= 1e-8 * theta:
            return float(1.0 / theta)
        theta_old = theta
        betas.append(beta)
        Q.append(w / beta)
    raise ConvergenceError(f"eigenvalue iteration did not converge in {max_iter} steps")
