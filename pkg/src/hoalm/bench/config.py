"""Experiment configuration: flat JSON objects plus a nested problem spec.

Single-run config keys::

    problem      {"kind": ..., <factory parameters>}      required
    r, epsilon   positive reals                           required
    n_iters      nonnegative integer                      required
    dual_update  "stable" (default) or "explicit"
    inner        NewtonConfig overrides, e.g. {"grad_tol_abs": 1e-13}
    label        legend text for charts (optional)
    reference_dir  where reference solutions are cached (optional)

Sweep configs replace ``r``/``epsilon`` by lists (``r_values``,
``epsilon_values``); if both are absent the default grid is used.
Initial guesses are always zero and cannot be configured.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..alm import EXPLICIT, STABLE, AlmConfig
from ..newton import NewtonConfig
from ..problems import make_problem

DEFAULT_R_GRID = (1.5, 2.0, 3.0, 4.0)
DEFAULT_EPS_GRID = (1.0, 0.1, 0.01)
MAX_ORDER = 8.0

_INNER_KEYS = {f.name for f in fields(NewtonConfig)}


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


def _positive(name, x):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x) or x <= 0:
        raise ConfigError(f"{name} must be a positive number, got {x!r}")
    return float(x)


def _order(x):
    r = _positive("r", x)
    if not 1.0 < r <= MAX_ORDER:
        raise ConfigError(f"r must lie in (1, {MAX_ORDER:g}], got {r}")
    return r


def _iters(x):
    if isinstance(x, bool) or not isinstance(x, int) or x < 0:
        raise ConfigError(f"n_iters must be a nonnegative integer, got {x!r}")
    return x


def _inner(d) -> dict:
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise ConfigError("inner must be an object of NewtonConfig overrides")
    unknown = set(d) - _INNER_KEYS
    if unknown:
        raise ConfigError(f"unknown inner solver keys {sorted(unknown)}; allowed {sorted(_INNER_KEYS)}")
    try:
        NewtonConfig(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad inner solver settings: {exc}") from exc
    return dict(d)


def _problem(spec) -> dict:
    """Validate by construction and return the fully populated spec."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("problem must be an object with a 'kind' key")
    try:
        return make_problem(spec).spec()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _dual_update(x):
    if x not in (EXPLICIT, STABLE):
        raise ConfigError(f"dual_update must be {EXPLICIT!r} or {STABLE!r}, got {x!r}")
    return x


@dataclass(frozen=True)
class ExperimentConfig:
    problem: dict
    r: float
    epsilon: float
    n_iters: int
    dual_update: str = STABLE
    inner: dict = field(default_factory=dict)
    label: str | None = None
    reference_dir: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        allowed = {f.name for f in fields(cls)}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        for key in ("problem", "r", "epsilon", "n_iters"):
            if key not in d:
                raise ConfigError(f"missing required key {key!r}")
        return cls(
            problem=_problem(d["problem"]),
            r=_order(d["r"]),
            epsilon=_positive("epsilon", d["epsilon"]),
            n_iters=_iters(d["n_iters"]),
            dual_update=_dual_update(d.get("dual_update", STABLE)),
            inner=_inner(d.get("inner")),
            label=d.get("label"),
            reference_dir=d.get("reference_dir"),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def alm_config(self) -> AlmConfig:
        return AlmConfig(self.r, self.epsilon, self.n_iters, self.dual_update, NewtonConfig(**self.inner))

    def with_(self, **changes) -> "ExperimentConfig":
        d = self.to_dict()
        d.update(changes)
        return ExperimentConfig.from_dict(d)

    @property
    def display_label(self) -> str:
        return self.label or f"r={self.r:g}, eps={self.epsilon:g}, {self.dual_update}"


@dataclass(frozen=True)
class SweepConfig:
    problem: dict
    r_values: tuple
    epsilon_values: tuple
    n_iters: int
    dual_update: str = STABLE
    inner: dict = field(default_factory=dict)
    default_grid: bool = False
    reference_dir: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        allowed = {"problem", "r_values", "epsilon_values", "n_iters", "dual_update", "inner", "reference_dir"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown sweep keys {sorted(unknown)}")
        for key in ("problem", "n_iters"):
            if key not in d:
                raise ConfigError(f"missing required key {key!r}")
        default = "r_values" not in d and "epsilon_values" not in d
        rs = d.get("r_values", DEFAULT_R_GRID)
        es = d.get("epsilon_values", DEFAULT_EPS_GRID)
        if not isinstance(rs, (list, tuple)) or not isinstance(es, (list, tuple)):
            raise ConfigError("r_values and epsilon_values must be lists")
        return cls(
            problem=_problem(d["problem"]),
            r_values=tuple(_order(r) for r in rs),
            epsilon_values=tuple(_positive("epsilon", e) for e in es),
            n_iters=_iters(d["n_iters"]),
            dual_update=_dual_update(d.get("dual_update", STABLE)),
            inner=_inner(d.get("inner")),
            default_grid=default,
            reference_dir=d.get("reference_dir"),
        )

    def points(self) -> list[ExperimentConfig]:
        return [ExperimentConfig(self.problem, r, e, self.n_iters, self.dual_update, dict(self.inner),
                                 f"r={r:g}, eps={e:g}", self.reference_dir)
                for r in self.r_values for e in self.epsilon_values]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["r_values"], d["epsilon_values"] = list(self.r_values), list(self.epsilon_values)
        return d


def load_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
