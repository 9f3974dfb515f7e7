"""High-order augmented Lagrangian method for ``min F(v) s.t. Bv = g``.

The multiplier step is either the explicit power-type update or the
stable least-squares update ``lambda = -(B B^t)^{-1} B grad F(u)``.
The dual energy ``E_d(s) = F*(-B^t s) + (g, s)`` is tracked along the run,
and ``ppm_on_dual`` runs the proximal point method on ``E_d`` directly so
the two sequences can be compared.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import linalg
from .newton import NewtonConfig, NewtonError, minimize
from .normed_spaces import (
    NormedSpaceSpec, duality_map_jacobian, holder_conjugate, inverse_duality_map, norm,
)
from .oracles import FunctionalOracle, bregman_sym, conjugate_value
from .ppm import PpmConfig, PpmTrace, ppm_run

EXPLICIT = "explicit"
STABLE = "stable"


class ConstrainedProblem:
    """``F``, ``B``, ``g`` plus the norms carried by the primal and multiplier spaces."""

    kind = "generic"

    def __init__(self, oracle: FunctionalOracle, B, g, primal_space: NormedSpaceSpec | None = None,
                 dual_space: NormedSpaceSpec | None = None):
        B = np.atleast_2d(np.asarray(B, dtype=float))
        g = np.atleast_1d(np.asarray(g, dtype=float))
        m, n = B.shape
        if n != oracle.dim:
            raise ValueError(f"B has {n} columns but F acts on dimension {oracle.dim}")
        if g.shape != (m,):
            raise ValueError(f"g must have length {m}, got shape {g.shape}")
        self.oracle, self.B, self.g = oracle, B, g
        self.primal_space = primal_space or NormedSpaceSpec.euclidean(n)
        self.dual_space = dual_space or NormedSpaceSpec.euclidean(m)
        if self.primal_space.dim != n or self.dual_space.dim != m:
            raise ValueError("space dimensions do not match B")
        self.BBt = B @ B.T
        try:
            self.bbt_min_eig = linalg.smallest_eigenvalue_spd(self.BBt)
        except np.linalg.LinAlgError:
            self.bbt_min_eig = 0.0
        if not self.bbt_min_eig > 1e-12:
            raise ValueError("B must be surjective (B B^t is singular)")
        self.bbt_factor = linalg.cholesky_factor(self.BBt)
        self.delta_hess = 1e-12 * (1.0 + float(np.linalg.norm(g)))

    @property
    def n_primal(self) -> int:
        return self.B.shape[1]

    @property
    def n_dual(self) -> int:
        return self.B.shape[0]

    def residual(self, v) -> np.ndarray:
        return self.B @ v - self.g

    def feasibility(self, v) -> float:
        return float(np.linalg.norm(self.residual(v)))

    def primal_error(self, u, u_ref) -> float:
        return float(np.linalg.norm(np.asarray(u) - np.asarray(u_ref)))

    def spec(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class AlmConfig:
    r: float
    epsilon: float
    n_iters: int
    dual_update: str = STABLE
    inner: NewtonConfig = field(default_factory=NewtonConfig)

    def __post_init__(self):
        if not self.r > 1.0:
            raise ValueError(f"order r must exceed 1, got {self.r}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.n_iters < 0:
            raise ValueError("n_iters must be nonnegative")
        if self.dual_update not in (EXPLICIT, STABLE):
            raise ValueError(f"dual_update must be {EXPLICIT!r} or {STABLE!r}")

    @property
    def r_star(self) -> float:
        return holder_conjugate(self.r)


class AugmentedLagrangian(FunctionalOracle):
    """Primal subproblem objective
    ``F(v) + (lam, Bv - g) + ||Bv - g||_*^{r*} / (r* eps^{r*-1})``."""

    def __init__(self, problem: ConstrainedProblem, lam, r: float, epsilon: float):
        self.problem = problem
        self.lam = np.asarray(lam, dtype=float)
        self.r, self.epsilon = float(r), float(epsilon)
        self.r_star = holder_conjugate(r)
        self.scale = epsilon ** (-(self.r_star - 1.0))
        self.dim = problem.n_primal
        self._wstar = problem.dual_space.dual()

    def value(self, v):
        p = self.problem
        res = p.residual(v)
        pen = self.scale / self.r_star * norm(self._wstar, res) ** self.r_star
        return p.oracle.value(v) + float(self.lam @ res) + pen

    def penalty_multiplier(self, v) -> np.ndarray:
        """``eps^{-(r*-1)} J_{r*}(Bv - g)`` in the dual norm."""
        res = self.problem.residual(v)
        return inverse_duality_map(self.problem.dual_space, res / self.epsilon, self.r)

    def gradient(self, v):
        p = self.problem
        return p.oracle.gradient(v) + p.B.T @ (self.lam + self.penalty_multiplier(v))

    def hessian(self, v):
        p = self.problem
        jac = duality_map_jacobian(self._wstar, p.residual(v), self.r_star, floor=p.delta_hess)
        return p.oracle.hessian(v) + self.scale * (p.B.T @ jac @ p.B)


def primal_step(problem: ConstrainedProblem, lam_n, cfg: AlmConfig, x0=None) -> np.ndarray:
    x0 = np.zeros(problem.n_primal) if x0 is None else x0
    sub = AugmentedLagrangian(problem, lam_n, cfg.r, cfg.epsilon)
    try:
        return minimize(sub, x0, cfg.inner).minimizer
    except NewtonError as exc:
        raise NewtonError(
            f"primal subproblem failed (r={cfg.r}, eps={cfg.epsilon}, "
            f"|lambda|={np.linalg.norm(lam_n):.3e}): {exc}", exc.x, exc.grad_norm) from exc


def dual_update_explicit(problem: ConstrainedProblem, lam_n, u_next, cfg: AlmConfig) -> np.ndarray:
    res = problem.residual(u_next)
    return np.asarray(lam_n, dtype=float) + inverse_duality_map(
        problem.dual_space, res / cfg.epsilon, cfg.r)


def dual_update_stable(problem: ConstrainedProblem, u_next) -> np.ndarray:
    rhs = problem.B @ problem.oracle.gradient(u_next)
    return -linalg.solve(problem.bbt_factor, rhs)


class DualEnergy(NamedTuple):
    value: float
    fallback: bool


def dual_energy(problem: ConstrainedProblem, sigma, inner: NewtonConfig | None = None, x0=None):
    """``E_d(sigma)`` through a numerical conjugate; returns ``(value, argmax)``."""
    sigma = np.asarray(sigma, dtype=float)
    val, v = conjugate_value(problem.oracle, -problem.B.T @ sigma, inner, x0=x0)
    return val + float(problem.g @ sigma), v


def dual_energy_at_iterate(problem: ConstrainedProblem, u_next, lam_next, inner: NewtonConfig | None = None,
                           rel_tol: float = 1e-8) -> DualEnergy:
    """``E_d(lam) = -F(u) - (lam, Bu - g)`` when ``-B^t lam = grad F(u)``.

    If the pair violates that relation beyond ``rel_tol`` the conjugate is
    evaluated numerically instead and ``fallback`` is set.
    """
    u_next = np.asarray(u_next, dtype=float)
    lam_next = np.asarray(lam_next, dtype=float)
    grad = problem.oracle.gradient(u_next)
    mismatch = np.linalg.norm(grad + problem.B.T @ lam_next)
    if mismatch <= rel_tol * (1.0 + np.linalg.norm(grad)):
        val = -problem.oracle.value(u_next) - float(lam_next @ problem.residual(u_next))
        return DualEnergy(val, False)
    val, _ = dual_energy(problem, lam_next, inner, x0=u_next)
    return DualEnergy(val, True)


class DualEnergyOracle(FunctionalOracle):
    """``E_d`` as an oracle: gradient ``g - B v(s)``, Hessian ``B H(v)^{-1} B^t``,
    where ``v(s)`` maximises ``(-B^t s, v) - F(v)``."""

    def __init__(self, problem: ConstrainedProblem, inner: NewtonConfig | None = None):
        self.problem = problem
        self.inner = inner or NewtonConfig.strict(1e-13)
        self.dim = problem.n_dual
        self._key = None
        self._val = None
        self._argmax = None

    def _solve(self, sigma):
        sigma = self._vec(sigma)
        key = sigma.tobytes()
        if key != self._key:
            x0 = self._argmax if self._argmax is not None else None
            self._val, self._argmax = dual_energy(self.problem, sigma, self.inner, x0=x0)
            self._key = key
        return self._val, self._argmax

    def value(self, sigma):
        return self._solve(sigma)[0]

    def gradient(self, sigma):
        return self.problem.g - self.problem.B @ self._solve(sigma)[1]

    def hessian(self, sigma):
        v = self._solve(sigma)[1]
        H = self.problem.oracle.hessian(v)
        B = self.problem.B
        return B @ np.linalg.solve(H, B.T)


def ppm_on_dual(problem: ConstrainedProblem, sigma0, cfg: PpmConfig | AlmConfig) -> PpmTrace:
    if isinstance(cfg, AlmConfig):
        cfg = PpmConfig(cfg.r, cfg.epsilon, cfg.n_iters, cfg.inner)
    return ppm_run(DualEnergyOracle(problem, cfg.inner), problem.dual_space, sigma0, cfg)


@dataclass
class AlmRecord:
    iteration: int
    u: np.ndarray
    lam: np.ndarray
    feasibility: float
    dual_energy: float | None
    dual_gap: float | None
    primal_err: float | None
    dual_err: float | None
    dfsym: float | None
    wall_ms: float
    energy_fallback: bool = False


@dataclass
class AlmTrace:
    rows: list[AlmRecord] = field(default_factory=list)
    failure: str | None = None
    reference_energy: float | None = None

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.rows],
                        dtype=float)

    @property
    def multipliers(self) -> np.ndarray:
        return np.array([r.lam for r in self.rows])

    @property
    def iterates(self) -> np.ndarray:
        return np.array([r.u for r in self.rows])


def alm_run(problem: ConstrainedProblem, lam0, cfg: AlmConfig, reference=None, u0=None,
            track_dual_energy: bool = True) -> AlmTrace:
    """Run ``cfg.n_iters`` outer iterations from ``(u0, lam0)`` (zeros by default).

    ``reference`` is an optional ``(u_ref, lam_ref)`` pair used for the error
    columns. Inner-solver failures end the run; the partial trace carries
    the reason in ``failure``.
    """
    lam = np.zeros(problem.n_dual) if lam0 is None else np.array(lam0, dtype=float)
    u = np.zeros(problem.n_primal) if u0 is None else np.array(u0, dtype=float)
    u_ref = lam_ref = None
    trace = AlmTrace()
    if reference is not None:
        u_ref, lam_ref = (np.asarray(x, dtype=float) for x in reference)
        if track_dual_energy:
            trace.reference_energy = dual_energy_at_iterate(problem, u_ref, lam_ref, cfg.inner).value
    t0 = time.perf_counter()

    def record(k, u, lam, energy: DualEnergy | None):
        e_val = None if energy is None else energy.value
        gap = None
        if e_val is not None and trace.reference_energy is not None:
            gap = e_val - trace.reference_energy
        trace.rows.append(AlmRecord(
            k, u.copy(), lam.copy(), problem.feasibility(u), e_val, gap,
            None if u_ref is None else problem.primal_error(u, u_ref),
            None if lam_ref is None else float(np.linalg.norm(lam - lam_ref)),
            None if u_ref is None else bregman_sym(problem.oracle, u, u_ref),
            1e3 * (time.perf_counter() - t0),
            False if energy is None else energy.fallback))

    energy = None
    if track_dual_energy:
        try:
            energy = dual_energy_at_iterate(problem, u, lam, cfg.inner)
        except NewtonError:
            energy = None
    record(0, u, lam, energy)
    for k in range(1, cfg.n_iters + 1):
        try:
            u_next = primal_step(problem, lam, cfg, x0=u)
            if cfg.dual_update == EXPLICIT:
                lam_next = dual_update_explicit(problem, lam, u_next, cfg)
            else:
                lam_next = dual_update_stable(problem, u_next)
            energy = dual_energy_at_iterate(problem, u_next, lam_next, cfg.inner) if track_dual_energy else None
        except (NewtonError, np.linalg.LinAlgError) as exc:
            trace.failure = f"iteration {k}: {exc}"
            break
        if not (np.all(np.isfinite(u_next)) and np.all(np.isfinite(lam_next))):
            trace.failure = f"iteration {k}: non-finite iterate"
            break
        u, lam = u_next, lam_next
        record(k, u, lam, energy)
    return trace


def kkt_residual(problem: ConstrainedProblem, u, lam) -> float:
    """Euclidean norm of ``(grad F(u) + B^t lam, Bu - g)``."""
    r1 = problem.oracle.gradient(u) + problem.B.T @ lam
    return float(np.hypot(np.linalg.norm(r1), np.linalg.norm(problem.residual(u))))


def kkt_polish(problem: ConstrainedProblem, u, lam, max_steps: int = 5):
    """Newton steps on the optimality system, kept only while they reduce its residual."""
    n, m = problem.n_primal, problem.n_dual
    u, lam = np.array(u, dtype=float), np.array(lam, dtype=float)
    best = kkt_residual(problem, u, lam)
    zero = np.zeros((m, m))
    for _ in range(max_steps):
        rhs = -np.concatenate([problem.oracle.gradient(u) + problem.B.T @ lam, problem.residual(u)])
        K = np.block([[problem.oracle.hessian(u), problem.B.T], [problem.B, zero]])
        try:
            d = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            break
        u_new, lam_new = u + d[:n], lam + d[n:]
        res = kkt_residual(problem, u_new, lam_new)
        if not res < best:
            break
        u, lam, best = u_new, lam_new, res
    return u, lam, best


@dataclass
class ReferenceRun:
    u: np.ndarray
    lam: np.ndarray
    iterations: int
    kkt_before_polish: float
    kkt_after_polish: float


def reference_solve(problem: ConstrainedProblem, min_iters: int = 1000, inner_tol: float = 1e-13,
                    patience: int = 50, max_iters: int = 100_000) -> ReferenceRun:
    """High-accuracy reference: ALM with ``r = 2``, ``eps = 1`` and the stable update from zero.

    Runs at least ``min_iters`` outer iterations and then continues until the
    multiplier increment stops improving for ``patience`` iterations. The
    result is finished with :func:`kkt_polish`, since the inner tolerance
    alone limits feasibility to roughly ``inner_tol * eps``.
    """
    cfg = AlmConfig(2.0, 1.0, 1, STABLE, NewtonConfig.strict(inner_tol))
    u = np.zeros(problem.n_primal)
    lam = np.zeros(problem.n_dual)
    best, since = np.inf, 0
    k = 0
    for k in range(1, max_iters + 1):
        u = primal_step(problem, lam, cfg, x0=u)
        lam_next = dual_update_stable(problem, u)
        step = float(np.linalg.norm(lam_next - lam))
        lam = lam_next
        if step < best:
            best, since = step, 0
        else:
            since += 1
        if k >= min_iters and (step == 0.0 or since >= patience):
            break
    before = kkt_residual(problem, u, lam)
    u, lam, after = kkt_polish(problem, u, lam)
    return ReferenceRun(u, lam, k, before, after)
