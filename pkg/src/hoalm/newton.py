"""Damped Newton method with Armijo backtracking for smooth convex problems."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, LinAlgError

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps
_NOISE_PATIENCE = 10  # rounding-level steps allowed without halving the gradient norm


@dataclass(frozen=True)
class NewtonConfig:
    grad_tol_abs: float = 1e-11
    grad_tol_rel: float = 1e-9
    max_iters: int = 200
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 60
    hess_reg_init: float = 1e-12

    def __post_init__(self):
        if min(self.grad_tol_abs, self.grad_tol_rel, self.hess_reg_init) <= 0:
            raise ValueError("tolerances and regularisation must be positive")
        if self.max_iters < 1 or self.max_backtracks < 1:
            raise ValueError("iteration caps must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if not 0.0 < self.armijo_c < 0.5:
            raise ValueError("armijo_c must lie in (0, 0.5)")

    @classmethod
    def strict(cls, tol: float, **kw) -> "NewtonConfig":
        """Both absolute and relative tolerance set to ``tol``."""
        return cls(grad_tol_abs=tol, grad_tol_rel=tol, **kw)


@dataclass
class NewtonStep:
    value_before: float
    value_after: float
    step: float
    slope: float  # (grad, direction) before the step
    grad_norm: float
    regularization: float
    noise_accept: bool = False


@dataclass
class NewtonResult:
    minimizer: np.ndarray
    iterations: int
    final_grad_norm: float
    backtrack_total: int
    initial_grad_norm: float = 0.0
    steps: list[NewtonStep] = field(default_factory=list)
    stalled: bool = False  # stopped on the rounding-level Newton decrement, not the gradient test


class NewtonError(RuntimeError):
    def __init__(self, message: str, x=None, grad_norm: float = float("nan")):
        super().__init__(message)
        self.x = x
        self.grad_norm = grad_norm


def _direction(H: np.ndarray, g: np.ndarray, reg_init: float):
    n = H.shape[0]
    tau = 0.0
    base = reg_init * (1.0 + abs(np.trace(H)) / n)
    for _ in range(200):
        try:
            c = cholesky(H + tau * np.eye(n), lower=True, check_finite=False)
            d = -cho_solve((c, True), g, check_finite=False)
            if np.all(np.isfinite(d)):
                return d, tau
        except LinAlgError:
            pass
        tau = base if tau == 0.0 else 2.0 * tau
    raise NewtonError("Hessian regularisation failed")


def _finite(x, what):
    if not np.all(np.isfinite(x)):
        raise NewtonError(f"non-finite {what}", x)


def _gradient_backtrack(oracle, x, d, gnorm, cfg):
    t = 1.0
    for _ in range(cfg.max_backtracks + 1):
        xn = x + t * d
        gn = oracle.gradient(xn)
        if np.all(np.isfinite(gn)) and np.linalg.norm(gn) < gnorm:
            return xn, oracle.value(xn), gn, t
        t *= cfg.backtrack_factor
    return None


def minimize(oracle, x0, cfg: NewtonConfig | None = None, verbose: bool = False) -> NewtonResult:
    """Minimise a smooth convex oracle from ``x0``.

    Stops when ``||grad|| <= grad_tol_abs + grad_tol_rel * (1 + ||grad(x0)||)``.
    Steps are accepted by the Armijo rule. Once the predicted decrease drops
    below rounding level in ``F`` the value carries no information, and a
    step is accepted instead if it lowers the gradient norm; the same rule
    rescues an Armijo search that fails only at rounding level. Such steps
    are flagged ``noise_accept``. If no step lowers the gradient norm in that
    regime, or ten such steps fail to halve it, the best point seen is
    returned with ``stalled`` set.
    """
    cfg = cfg or NewtonConfig()
    x = np.array(x0, dtype=float)
    f = oracle.value(x)
    g = oracle.gradient(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NewtonError(f"non-finite value or gradient at starting point {x}", x)
    gnorm = float(np.linalg.norm(g))
    g0 = gnorm
    tol = cfg.grad_tol_abs + cfg.grad_tol_rel * (1.0 + g0)
    steps: list[NewtonStep] = []
    backtracks = 0
    streak = None  # (grad norm at start, best (gnorm, x)) of the current run of rounding-level steps
    for it in range(cfg.max_iters + 1):
        if gnorm <= tol:
            return NewtonResult(x, it, gnorm, backtracks, g0, steps)
        if it == cfg.max_iters:
            break
        H = oracle.hessian(x)
        _finite(H, "Hessian")
        d, tau = _direction(H, g, cfg.hess_reg_init)
        slope = float(g @ d)
        if slope >= 0.0:
            raise NewtonError(f"not a descent direction (slope {slope:.3e})", x, gnorm)
        noise_level = 100.0 * _EPS * max(1.0, abs(f))
        t = 1.0
        if -slope <= noise_level:
            # predicted decrease is below rounding in F: judge steps by gradient norm
            if streak is None:
                streak = [gnorm, gnorm, x, 0]
            elif gnorm < streak[1]:
                streak[1], streak[2] = gnorm, x
            streak[3] += 1
            if streak[3] > _NOISE_PATIENCE and streak[1] > 0.5 * streak[0]:
                if verbose:
                    log.info("newton stalled at rounding floor, grad=%.3e", streak[1])
                return NewtonResult(streak[2], it, streak[1], backtracks, g0, steps, stalled=True)
            found = _gradient_backtrack(oracle, x, d, gnorm, cfg)
            if found is None:
                # Newton decrement below rounding and no step helps: the gradient
                # sits at its evaluation floor (e.g. a non-Lipschitz penalty term)
                if verbose:
                    log.info("newton stalled at rounding floor, grad=%.3e", gnorm)
                return NewtonResult(x, it, gnorm, backtracks, g0, steps, stalled=True)
            xn, fn, gn, t = found
            backtracks += round(np.log(t) / np.log(cfg.backtrack_factor))
            noise, k = True, -1
        else:
            noise = False
            streak = None
            fallback = None  # (grad norm, t, x, f, g) of the best rounding-level candidate
            for k in range(cfg.max_backtracks + 1):
                xn = x + t * d
                fn = oracle.value(xn)
                if np.isfinite(fn) and fn <= f + cfg.armijo_c * t * slope:
                    gn = oracle.gradient(xn)
                    break
                if np.isfinite(fn) and abs(fn - f) <= noise_level:
                    gt = oracle.gradient(xn)
                    nt = float(np.linalg.norm(gt))
                    if np.all(np.isfinite(gt)) and nt < gnorm and (fallback is None or nt < fallback[0]):
                        fallback = (nt, t, xn, fn, gt)
                if k == cfg.max_backtracks:
                    if fallback is None:
                        raise NewtonError(
                            f"line search exhausted after {k} backtracks (grad norm {gnorm:.3e})", x, gnorm)
                    _, t, xn, fn, gn = fallback
                    noise = True
                    break
                t *= cfg.backtrack_factor
                backtracks += 1
        if k == 0 and not noise and -slope > 1e3 * _EPS * max(1.0, abs(f)):
            # keep halving while the value still drops; damps the +/- oscillation
            # Newton exhibits where the Hessian is singular (|t|^s, s < 2)
            while t > cfg.backtrack_factor ** cfg.max_backtracks:
                xt = x + cfg.backtrack_factor * t * d
                ft = oracle.value(xt)
                if not (np.isfinite(ft) and ft < fn):
                    break
                t *= cfg.backtrack_factor
                xn, fn = xt, ft
                backtracks += 1
            gn = oracle.gradient(xn)
        if not np.all(np.isfinite(gn)):
            raise NewtonError(f"non-finite gradient at {xn}", xn, gnorm)
        steps.append(NewtonStep(f, fn, t, slope, float(np.linalg.norm(gn)), tau, noise))
        x, f, g = xn, fn, gn
        gnorm = steps[-1].grad_norm
        if verbose or log.isEnabledFor(logging.DEBUG):
            log.log(logging.INFO if verbose else logging.DEBUG,
                    "newton it=%d value=%.16e grad=%.3e step=%.3e", it + 1, f, gnorm, t)
    raise NewtonError(f"no convergence in {cfg.max_iters} iterations (grad norm {gnorm:.3e})", x, gnorm)
