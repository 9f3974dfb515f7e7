"""Closed-form rate constants and per-iteration checks of recorded traces.

Each ``check_*`` function compares a sequence of energy gaps (or Bregman
values) against a bound and returns a :class:`CertificateReport` whose
margins are ``bound - observed``; a report passes when every margin is at
least ``-slack``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import linalg
from .normed_spaces import holder_conjugate
from .oracles import FunctionalOracle, bregman, QuadraticOracle

LINEAR = "linear"
SUPERLINEAR = "superlinear"
SUBLINEAR = "sublinear"
PRIMAL_BREGMAN = "primal_bregman"
DUAL_DESCENT = "dual_descent"


@dataclass(frozen=True)
class ConvexityParams:
    """``(p, mu)``-uniform convexity: ``D_F(v, w) >= (mu/p) ||v - w||^p``."""

    p: float
    mu: float
    exact: bool = True

    def __post_init__(self):
        if not self.p >= 2.0:
            raise ValueError(f"uniform convexity exponent must be >= 2, got {self.p}")
        if not self.mu > 0.0:
            raise ValueError(f"mu must be positive, got {self.mu}")


@dataclass(frozen=True)
class SmoothnessParams:
    """``(q, L)``-weak smoothness: ``D_F(v, w) <= (L/q) ||v - w||^q``."""

    q: float
    L: float

    def __post_init__(self):
        if not 1.0 < self.q <= 2.0:
            raise ValueError(f"smoothness exponent must lie in (1, 2], got {self.q}")
        if not self.L > 0.0:
            raise ValueError(f"L must be positive, got {self.L}")


@dataclass
class CertificateReport:
    theorem: str
    constants: dict
    margins: list[float]
    passed: bool
    worst_iteration: int | None
    slack: float
    advisory: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _report(theorem, constants, margins, slack, advisory=False, **extra) -> CertificateReport:
    margins = [float(m) for m in margins]
    worst = int(np.argmin(margins)) if margins else None
    passed = all(m >= -slack for m in margins)
    return CertificateReport(theorem, constants, margins, passed, worst, slack, advisory, extra)


def _gaps(gaps) -> np.ndarray:
    z = np.asarray(gaps, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("gaps must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(z)):
        raise ValueError("gaps must be finite")
    if np.any(z < 0.0):
        raise ValueError(f"negative gap at index {int(np.argmax(z < 0.0))}")
    return z


def _default_slack(z, slack):
    return 1e-10 * (1.0 + z[0]) if slack is None else float(slack)


def gamma_constant(p: float, mu: float, epsilon: float) -> float:
    """Linear-rate constant; the contraction factor is ``1/(1 + gamma)``."""
    if not p >= 2.0 or not mu > 0.0 or not epsilon > 0.0:
        raise ValueError("need p >= 2, mu > 0, epsilon > 0")
    x = mu / epsilon
    return p / (p - 1.0) * x ** (1.0 / (p - 1.0)) + x ** (p / (p - 1.0)) / (p - 1.0)


def superlinear_constant(p: float, mu: float, epsilon: float, r: float) -> float:
    """``(p - 1) (p^{r-p} eps^p / mu^r)^{1/(p-1)}``."""
    return (p - 1.0) * (p ** (r - p) * epsilon ** p / mu ** r) ** (1.0 / (p - 1.0))


def sublinear_constants(p: float, mu: float, epsilon: float, r: float) -> tuple[float, float]:
    """``(beta, C_eps)`` of the sublinear envelope."""
    if not 1.0 < r < p:
        raise ValueError(f"sublinear regime needs 1 < r < p, got r={r}, p={p}")
    beta = p * (r - 1.0) / (p - r)
    c_eps = (p / (p - 1.0)) ** (r * (p - 1.0) / (p * (r - 1.0))) * (mu ** (r / p) / epsilon) ** (1.0 / (r - 1.0))
    return beta, c_eps


def sublinear_envelope(zeta0: float, n, p: float, mu: float, epsilon: float, r: float) -> np.ndarray:
    beta, c_eps = sublinear_constants(p, mu, epsilon, r)
    n = np.asarray(n, dtype=float)
    return zeta0 / (1.0 + n / (beta + 1.0) * math.log1p(c_eps * zeta0 ** (1.0 / beta))) ** beta


def check_linear(gaps, params: ConvexityParams, epsilon: float, slack: float | None = None) -> CertificateReport:
    """``zeta_{n+1} <= zeta_n / (1 + gamma)`` for every n (the ``r = p`` case)."""
    z = _gaps(gaps)
    slack = _default_slack(z, slack)
    gamma = gamma_constant(params.p, params.mu, epsilon)
    factor = 1.0 / (1.0 + gamma)
    margins = factor * z[:-1] - z[1:]
    return _report(LINEAR, {"p": params.p, "mu": params.mu, "epsilon": epsilon, "gamma": gamma,
                            "factor": factor}, margins, slack, advisory=not params.exact)


def check_superlinear(gaps, params: ConvexityParams, epsilon: float, r: float,
                      slack: float | None = None) -> CertificateReport:
    """``zeta_{n+1} <= C zeta_n^{(r-1)/(p-1)}`` with the superlinear constant C (``r > p``)."""
    if not r > params.p:
        raise ValueError(f"superlinear regime needs r > p, got r={r}, p={params.p}")
    z = _gaps(gaps)
    slack = _default_slack(z, slack)
    c = superlinear_constant(params.p, params.mu, epsilon, r)
    order = (r - 1.0) / (params.p - 1.0)
    margins = c * z[:-1] ** order - z[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        emp = np.log(z[1:]) / np.log(z[:-1])
    emp = [float(x) if np.isfinite(x) else None for x in emp]
    return _report(SUPERLINEAR, {"p": params.p, "mu": params.mu, "epsilon": epsilon, "r": r,
                                 "constant": c, "order": order}, margins, slack,
                   advisory=not params.exact, empirical_order=emp)


def check_sublinear(gaps, params: ConvexityParams, epsilon: float, r: float,
                    slack: float | None = None) -> CertificateReport:
    """``zeta_n`` below the closed-form envelope for every n (``r < p``)."""
    z = _gaps(gaps)
    slack = _default_slack(z, slack)
    beta, c_eps = sublinear_constants(params.p, params.mu, epsilon, r)
    bound = sublinear_envelope(z[0], np.arange(z.size), params.p, params.mu, epsilon, r)
    margins = bound - z
    return _report(SUBLINEAR, {"p": params.p, "mu": params.mu, "epsilon": epsilon, "r": r,
                               "beta": beta, "C_eps": c_eps}, margins, slack, advisory=not params.exact)


def check_primal_bregman(dfsym, gaps, params: ConvexityParams, epsilon: float, r: float,
                         slack: float | None = None) -> CertificateReport:
    """``D^sym(u_{n+1}, u) <= (r-1)(zeta_n - zeta_{n+1}) + (eps/r)(p/mu)^{r/p} zeta_{n+1}^{r/p}``.

    ``dfsym[n]`` and ``gaps[n]`` belong to iterate n; the check runs over n >= 1.
    """
    z = _gaps(gaps)
    d = np.asarray(dfsym, dtype=float)
    if d.shape != z.shape:
        raise ValueError("dfsym and gaps must have equal length")
    slack = _default_slack(z, slack)
    p, mu = params.p, params.mu
    coef = epsilon / r * (p / mu) ** (r / p)
    bound = (r - 1.0) * (z[:-1] - z[1:]) + coef * z[1:] ** (r / p)
    margins = bound - d[1:]
    return _report(PRIMAL_BREGMAN, {"p": p, "mu": mu, "epsilon": epsilon, "r": r, "coefficient": coef},
                   margins, slack, advisory=not params.exact)


def check_dual_descent(energies, multipliers, epsilon: float, r: float, norm=np.linalg.norm,
                       slack: float | None = None) -> CertificateReport:
    """``E_d(lam_n) - E_d(lam_{n+1}) >= (eps/r) ||lam_{n+1} - lam_n||^r``."""
    e = np.asarray(energies, dtype=float)
    lam = np.asarray(multipliers, dtype=float)
    if lam.ndim == 1:
        lam = lam[:, None]
    if lam.shape[0] != e.size:
        raise ValueError("one multiplier per energy value is required")
    slack = 1e-10 * (1.0 + abs(e[0])) if slack is None else float(slack)
    steps = np.array([norm(lam[k + 1] - lam[k]) for k in range(e.size - 1)])
    margins = (e[:-1] - e[1:]) - epsilon / r * steps ** r
    return _report(DUAL_DESCENT, {"epsilon": epsilon, "r": r}, margins, slack)


def beta_B(problem) -> float:
    """``inf ||B^t s|| / ||s||``, i.e. ``sqrt(lambda_min(B B^t))`` for Euclidean norms."""
    if problem.primal_space.norm_kind != "euclidean" or problem.dual_space.norm_kind != "euclidean":
        raise ValueError("beta_B is only supported for Euclidean primal and multiplier norms")
    return math.sqrt(linalg.smallest_eigenvalue_spd(problem.B @ problem.B.T))


def dual_convexity_from_smoothness(smooth: SmoothnessParams, beta_b: float) -> ConvexityParams:
    """``E_d`` is ``(q*, beta_B^p L^{-(p-1)})``-uniformly convex."""
    if not beta_b > 0.0:
        raise ValueError("beta_B must be positive")
    p = holder_conjugate(smooth.q)
    return ConvexityParams(p, beta_b ** p * smooth.L ** (-(p - 1.0)), exact=True)


def p_for_data_fitting(s: float) -> float:
    """``max(s*, 2)``: convexity exponent of the dual energy for l^s data fitting."""
    if not s > 1.0:
        raise ValueError(f"s must exceed 1, got {s}")
    return max(holder_conjugate(s), 2.0)


def quadratic_dual_params(problem) -> ConvexityParams:
    """Exact dual ``(p, mu)`` for a quadratic ``F`` with Euclidean norms (``q = 2``, ``L = lambda_max(A)``)."""
    if not isinstance(problem.oracle, QuadraticOracle):
        raise ValueError("exact dual constants need a quadratic oracle")
    L = float(np.linalg.eigvalsh(problem.oracle.A)[-1])
    return dual_convexity_from_smoothness(SmoothnessParams(2.0, L), beta_B(problem))


def empirical_mu(oracle: FunctionalOracle, points, p: float, norm=np.linalg.norm) -> ConvexityParams:
    """Smallest ``p D_F(v, w) / ||v - w||^p`` over distinct pairs of ``points``.

    Only an estimate of a local constant, hence ``exact=False``.
    """
    pts = [np.asarray(x, dtype=float) for x in points]
    best = math.inf
    for i in range(len(pts)):
        for j in range(len(pts)):
            if i == j:
                continue
            dist = norm(pts[i] - pts[j])
            if dist <= 1e-8 * (1.0 + norm(pts[j])):
                continue
            best = min(best, p * bregman(oracle, pts[i], pts[j]) / dist ** p)
    if not (math.isfinite(best) and best > 0.0):
        raise ValueError("could not estimate a positive convexity constant from the given points")
    return ConvexityParams(p, best, exact=False)
