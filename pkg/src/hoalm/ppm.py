"""High-order proximal point method.

Each step minimises ``F(v) + (eps/r) ||v - u_n||^r`` with the damped Newton
solver, warm-started at ``u_n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .newton import NewtonConfig, NewtonError, minimize
from .normed_spaces import NormedSpaceSpec, duality_map, duality_map_jacobian, norm
from .oracles import FunctionalOracle


@dataclass(frozen=True)
class PpmConfig:
    r: float
    epsilon: float
    n_iters: int
    inner: NewtonConfig = field(default_factory=NewtonConfig)

    def __post_init__(self):
        if not self.r > 1.0:
            raise ValueError(f"order r must exceed 1, got {self.r}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.n_iters < 0:
            raise ValueError("n_iters must be nonnegative")


class ProxObjective(FunctionalOracle):
    """``v -> F(v) + (eps/r) ||v - center||^r``."""

    def __init__(self, oracle: FunctionalOracle, space: NormedSpaceSpec, center, r, epsilon):
        self.oracle, self.space = oracle, space
        self.center = np.asarray(center, dtype=float)
        self.r, self.epsilon = float(r), float(epsilon)
        self.dim = oracle.dim
        self.floor = 1e-12 * (1.0 + float(np.linalg.norm(self.center)))

    def value(self, v):
        return self.oracle.value(v) + self.epsilon / self.r * norm(self.space, v - self.center) ** self.r

    def gradient(self, v):
        return self.oracle.gradient(v) + self.epsilon * duality_map(self.space, v - self.center, self.r)

    def hessian(self, v):
        jac = duality_map_jacobian(self.space, v - self.center, self.r, floor=self.floor)
        return self.oracle.hessian(v) + self.epsilon * jac


def optimality_residual(oracle, space, u_next, u_prev, r, epsilon) -> float:
    """Euclidean norm of ``grad F(u_next) + eps J_r(u_next - u_prev)``."""
    res = oracle.gradient(u_next) + epsilon * duality_map(space, u_next - u_prev, r)
    return float(np.linalg.norm(res))


def ppm_step(oracle: FunctionalOracle, space: NormedSpaceSpec, u_n, cfg: PpmConfig) -> np.ndarray:
    if space.dim != oracle.dim:
        raise ValueError(f"space dim {space.dim} != oracle dim {oracle.dim}")
    u_n = np.asarray(u_n, dtype=float)
    prox = ProxObjective(oracle, space, u_n, cfg.r, cfg.epsilon)
    return minimize(prox, u_n, cfg.inner).minimizer


@dataclass
class PpmRecord:
    iterate: np.ndarray
    value: float
    step_norm: float
    residual: float
    gap: float | None


@dataclass
class PpmTrace:
    rows: list[PpmRecord] = field(default_factory=list)
    failure: str | None = None

    def __len__(self):
        return len(self.rows)

    @property
    def iterates(self) -> np.ndarray:
        return np.array([row.iterate for row in self.rows])

    @property
    def values(self) -> np.ndarray:
        return np.array([row.value for row in self.rows])

    @property
    def gaps(self) -> np.ndarray:
        return np.array([np.nan if row.gap is None else row.gap for row in self.rows])


def ppm_run(oracle: FunctionalOracle, space: NormedSpaceSpec, u0, cfg: PpmConfig,
            reference=None, reference_value: float | None = None) -> PpmTrace:
    """Run ``cfg.n_iters`` prox steps; the trace holds ``n_iters + 1`` rows.

    The energy gap column is filled when a reference minimiser (or its
    objective value) is supplied. A failing step ends the run; the partial
    trace is returned with ``failure`` set.
    """
    if reference_value is None and reference is not None:
        reference_value = oracle.value(np.asarray(reference, dtype=float))
    u = np.array(u0, dtype=float)
    f = oracle.value(u)

    def gap(val):
        return None if reference_value is None else val - reference_value

    trace = PpmTrace([PpmRecord(u.copy(), f, 0.0, float("nan"), gap(f))])
    for _ in range(cfg.n_iters):
        try:
            u_next = ppm_step(oracle, space, u, cfg)
        except NewtonError as exc:
            trace.failure = f"prox step {len(trace.rows)}: {exc}"
            break
        f = oracle.value(u_next)
        trace.rows.append(PpmRecord(
            u_next.copy(), f, norm(space, u_next - u),
            optimality_residual(oracle, space, u_next, u, cfg.r, cfg.epsilon), gap(f)))
        u = u_next
    return trace
