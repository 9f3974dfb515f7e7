"""Finite-dimensional normed spaces and power-type duality maps.

Two norm families are supported: the Euclidean norm and the coordinate
power norm ``(sum |v_i|^s)^(1/s)``. The pairing between a space and its
dual is always the standard coordinate inner product.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EUCLIDEAN = "euclidean"
COORDINATE_POWER = "coordinate_power"


def holder_conjugate(p: float) -> float:
    """Return ``p*`` with ``1/p + 1/p* = 1``."""
    if not p > 1.0:
        raise ValueError(f"exponent must be > 1, got {p}")
    return p / (p - 1.0)


@dataclass(frozen=True)
class PowerPair:
    p: float
    p_star: float

    def __post_init__(self):
        if not (self.p > 1.0 and self.p_star > 1.0):
            raise ValueError("both exponents must exceed 1")
        if abs(1.0 / self.p + 1.0 / self.p_star - 1.0) > 1e-14:
            raise ValueError(f"{self.p} and {self.p_star} are not Hölder conjugates")

    @classmethod
    def from_p(cls, p: float) -> "PowerPair":
        return cls(p, holder_conjugate(p))


@dataclass(frozen=True)
class NormedSpaceSpec:
    """Dimension plus norm kind; ``s`` is only used for ``coordinate_power``."""

    dim: int
    norm_kind: str = EUCLIDEAN
    s: float = 2.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        if self.norm_kind not in (EUCLIDEAN, COORDINATE_POWER):
            raise ValueError(f"unknown norm kind {self.norm_kind!r}")
        if self.norm_kind == COORDINATE_POWER and not self.s > 1.0:
            raise ValueError(f"coordinate power norm needs s > 1, got {self.s}")

    @classmethod
    def euclidean(cls, dim: int) -> "NormedSpaceSpec":
        return cls(dim, EUCLIDEAN)

    @classmethod
    def coordinate_power(cls, dim: int, s: float) -> "NormedSpaceSpec":
        return cls(dim, COORDINATE_POWER, float(s))

    @property
    def exponent(self) -> float:
        return 2.0 if self.norm_kind == EUCLIDEAN else self.s

    def dual(self) -> "NormedSpaceSpec":
        """The same coordinates carrying the dual norm."""
        if self.norm_kind == EUCLIDEAN:
            return self
        return NormedSpaceSpec(self.dim, COORDINATE_POWER, holder_conjugate(self.s))

    def to_dict(self) -> dict:
        d = {"dim": self.dim, "norm_kind": self.norm_kind}
        if self.norm_kind == COORDINATE_POWER:
            d["s"] = self.s
        return d


def _check(space: NormedSpaceSpec, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != space.dim:
        raise ValueError(f"expected a vector of length {space.dim}, got shape {v.shape}")
    return v


def _lp(v: np.ndarray, s: float) -> float:
    if s == 2.0:
        return float(np.linalg.norm(v))
    a = np.abs(v)
    m = a.max(initial=0.0)
    if m == 0.0:
        return 0.0
    # scaled to avoid overflow/underflow in |v|^s
    return float(m * np.sum((a / m) ** s) ** (1.0 / s))


def norm(space: NormedSpaceSpec, v) -> float:
    return _lp(_check(space, v), space.exponent)


def dual_norm(space: NormedSpaceSpec, v) -> float:
    return norm(space.dual(), v)


def _signed_power(v: np.ndarray, e: float) -> np.ndarray:
    return np.sign(v) * np.abs(v) ** e


def duality_map(space: NormedSpaceSpec, v, p: float) -> np.ndarray:
    """Gradient of ``(1/p)||.||^p`` at ``v``, with value 0 at the origin."""
    v = _check(space, v)
    if not p > 1.0:
        raise ValueError(f"power must be > 1, got {p}")
    s = space.exponent
    nv = _lp(v, s)
    if nv == 0.0:
        return np.zeros_like(v)
    if s == 2.0:
        return nv ** (p - 2.0) * v
    # ||v||^(p-s) |v_i|^(s-1) sign(v_i), written with v/||v|| to stay finite
    u = v / nv
    return nv ** (p - 1.0) * _signed_power(u, s - 1.0)


def inverse_duality_map(space: NormedSpaceSpec, w, p: float) -> np.ndarray:
    """Inverse of ``duality_map(space, ., p)``: the ``p*`` map of the dual norm."""
    return duality_map(space.dual(), _check(space, w), holder_conjugate(p))


def duality_map_jacobian(space: NormedSpaceSpec, v, p: float, floor: float = 0.0) -> np.ndarray:
    """Hessian of ``(1/p)||.||^p`` at ``v``.

    Where the Hessian blows up (``p < 2`` at the origin, or ``s < 2`` on a
    coordinate axis) the norm and the absolute coordinates are replaced by
    ``max(., floor)``. With ``floor = 0`` such points raise.
    """
    v = _check(space, v)
    n = space.dim
    s = space.exponent
    nv = max(_lp(v, s), floor)
    if nv == 0.0:
        if p > 2.0:
            return np.zeros((n, n))
        if p == 2.0 and s == 2.0:
            return np.eye(n)
        raise ZeroDivisionError("Hessian of the norm power is unbounded at 0; pass floor > 0")
    if s == 2.0:
        u = v / nv
        return nv ** (p - 2.0) * (np.eye(n) + (p - 2.0) * np.outer(u, u))
    a = np.maximum(np.abs(v), floor)
    if s < 2.0 and np.any(a == 0.0):
        raise ZeroDivisionError("coordinate kink: pass floor > 0")
    u = v / nv
    g = _signed_power(u, s - 1.0)
    diag = (a / nv) ** (s - 2.0)
    return nv ** (p - 2.0) * ((s - 1.0) * np.diag(diag) + (p - s) * np.outer(g, g))
