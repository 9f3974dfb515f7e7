"""Evaluation contract for smooth convex functionals.

An oracle exposes ``value``, ``gradient`` and a dense ``hessian``. Helpers
here compute Bregman distances, validate gradients by central differences
and evaluate Legendre-Fenchel conjugates numerically.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .newton import NewtonConfig, minimize

DELTA_HESS = 1e-10


class FunctionalOracle:
    """Base class; subclasses implement the three evaluations."""

    dim: int

    def value(self, v: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _vec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise ValueError(f"expected a vector of length {self.dim}, got shape {v.shape}")
        return v


class CallableOracle(FunctionalOracle):
    def __init__(self, dim: int, value: Callable, gradient: Callable, hessian: Callable):
        self.dim = dim
        self._f, self._g, self._h = value, gradient, hessian

    def value(self, v):
        return float(self._f(self._vec(v)))

    def gradient(self, v):
        return np.asarray(self._g(self._vec(v)), dtype=float)

    def hessian(self, v):
        return np.atleast_2d(np.asarray(self._h(self._vec(v)), dtype=float))


class QuadraticOracle(FunctionalOracle):
    """``F(v) = 1/2 (Av, v) - (b, v)`` with ``A`` symmetric positive definite."""

    def __init__(self, A, b=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != A.shape[1] or not np.allclose(A, A.T, rtol=0, atol=1e-12 * np.abs(A).max()):
            raise ValueError("A must be a symmetric square matrix")
        self.A = 0.5 * (A + A.T)
        self.dim = A.shape[0]
        self.b = np.zeros(self.dim) if b is None else np.asarray(b, dtype=float)

    def value(self, v):
        v = self._vec(v)
        return float(0.5 * v @ self.A @ v - self.b @ v)

    def gradient(self, v):
        return self.A @ self._vec(v) - self.b

    def hessian(self, v):
        return self.A.copy()

    def conjugate(self, xi) -> float:
        """Closed form ``1/2 (A^{-1}(xi + b), xi + b)``."""
        z = self._vec(xi) + self.b
        return float(0.5 * z @ np.linalg.solve(self.A, z))

    def conjugate_argmax(self, xi) -> np.ndarray:
        return np.linalg.solve(self.A, self._vec(xi) + self.b)


class PowerSumOracle(FunctionalOracle):
    """``F(v) = (1/s) sum_i |v_i - c_i|^s``, separable and convex for ``s > 1``."""

    def __init__(self, dim: int, s: float, center=None, delta_hess: float = DELTA_HESS):
        if not s > 1.0:
            raise ValueError(f"s must exceed 1, got {s}")
        self.dim, self.s, self.delta_hess = dim, float(s), delta_hess
        self.center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    def value(self, v):
        return float(np.sum(np.abs(self._vec(v) - self.center) ** self.s) / self.s)

    def gradient(self, v):
        d = self._vec(v) - self.center
        return np.sign(d) * np.abs(d) ** (self.s - 1.0)

    def hessian(self, v):
        d = np.maximum(np.abs(self._vec(v) - self.center), self.delta_hess)
        return np.diag((self.s - 1.0) * d ** (self.s - 2.0))


class _Tilted(FunctionalOracle):
    """``v -> F(v) - (xi, v)``; minimising it evaluates the conjugate."""

    def __init__(self, base: FunctionalOracle, xi: np.ndarray):
        self.base, self.xi, self.dim = base, xi, base.dim

    def value(self, v):
        return self.base.value(v) - float(self.xi @ v)

    def gradient(self, v):
        return self.base.gradient(v) - self.xi

    def hessian(self, v):
        return self.base.hessian(v)


def _pair(oracle: FunctionalOracle, v, w):
    return oracle._vec(v), oracle._vec(w)


def bregman(oracle: FunctionalOracle, v, w) -> float:
    """``D_F(v, w) = F(v) - F(w) - (grad F(w), v - w)``."""
    v, w = _pair(oracle, v, w)
    return oracle.value(v) - oracle.value(w) - float(oracle.gradient(w) @ (v - w))


def bregman_sym(oracle: FunctionalOracle, v, w) -> float:
    v, w = _pair(oracle, v, w)
    return float((oracle.gradient(v) - oracle.gradient(w)) @ (v - w))


def fd_check_gradient(oracle: FunctionalOracle, v, h: float = 1e-5) -> float:
    """Max over coordinates of ``|central difference - grad_i| / (1 + |grad_i|)``."""
    if not h > 0:
        raise ValueError("step must be positive")
    v = oracle._vec(v)
    g = oracle.gradient(v)
    worst = 0.0
    for i in range(oracle.dim):
        e = np.zeros_like(v)
        e[i] = h
        fd = (oracle.value(v + e) - oracle.value(v - e)) / (2.0 * h)
        worst = max(worst, abs(fd - g[i]) / (1.0 + abs(g[i])))
    return worst


def conjugate_value(oracle: FunctionalOracle, xi, cfg: NewtonConfig | None = None, x0=None):
    """Return ``(F*(xi), argmax)`` by minimising ``F(v) - (xi, v)``.

    Raises ``NewtonError`` if the inner solve fails.
    """
    xi = oracle._vec(xi)
    x0 = np.zeros(oracle.dim) if x0 is None else oracle._vec(x0)
    res = minimize(_Tilted(oracle, xi), x0, cfg or NewtonConfig())
    v = res.minimizer
    return float(xi @ v) - oracle.value(v), v
