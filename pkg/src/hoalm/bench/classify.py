"""Ratio-test classification of error sequences into convergence regimes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LINEAR = "linear"
SUPERLINEAR = "superlinear"
SUBLINEAR = "sublinear"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class ClassifierConfig:
    floor_rel: float = 1e-11  # errors below floor_rel * max(error) count as converged
    floor_abs: float = 1e-14
    window: int = 10  # ratios inspected for the linear/sublinear tests
    superlinear_drop: float = 0.1  # final ratio must fall below this fraction of the first
    linear_spread: float = 0.1  # min/max ratio over the window for a linear verdict
    sublinear_near_one: float = 0.9
    sublinear_gap_shrink: float = 0.8  # 1 - ratio must shrink by this factor over the whole run
    sublinear_window_shrink: float = 0.95  # and keep shrinking within the window


@dataclass
class Classification:
    regime: str
    ratios: list[float]
    used: int  # number of errors above the floor

    def at_least_linear(self) -> bool:
        return self.regime in (LINEAR, SUPERLINEAR)


def error_ratios(errors, cfg: ClassifierConfig | None = None) -> tuple[np.ndarray, int]:
    """Ratios ``e_{n+1}/e_n`` over the leading run of errors above the noise floor."""
    cfg = cfg or ClassifierConfig()
    e = np.asarray(errors, dtype=float)
    e = e[np.isfinite(e)]
    if e.size == 0:
        return np.empty(0), 0
    floor = max(cfg.floor_abs, cfg.floor_rel * float(np.max(np.abs(e))))
    above = np.abs(e) > floor
    used = int(np.argmin(above)) if not above.all() else e.size
    e = np.abs(e[:used])
    return e[1:] / e[:-1], used


def classify(errors, cfg: ClassifierConfig | None = None) -> Classification:
    """Label a sequence superlinear, linear or sublinear.

    superlinear: the last ratio is below ``superlinear_drop`` times the first
    and the sequence reached the noise floor or kept shrinking ratios.
    sublinear: the ratios approach one (last ratio above ``sublinear_near_one``,
    gap ``1 - ratio`` shrinking over the whole run and within the window).
    linear: the windowed ratios stay in ``[c, 1)`` with ``c`` at least
    ``linear_spread`` times the largest ratio.
    """
    cfg = cfg or ClassifierConfig()
    ratios, used = error_ratios(errors, cfg)
    out = [float(x) for x in ratios]
    if ratios.size < 2:
        return Classification(UNDETERMINED, out, used)
    if ratios[-1] <= cfg.superlinear_drop * ratios[0] and ratios[-1] < 1.0:
        return Classification(SUPERLINEAR, out, used)
    tail = ratios[-cfg.window:]
    if np.any(tail >= 1.0):
        return Classification(UNDETERMINED, out, used)
    gaps = 1.0 - tail
    if (tail[-1] >= cfg.sublinear_near_one and gaps[-1] <= cfg.sublinear_window_shrink * gaps[0]
            and gaps[-1] <= cfg.sublinear_gap_shrink * (1.0 - ratios[0])):
        return Classification(SUBLINEAR, out, used)
    if tail.min() >= cfg.linear_spread * tail.max():
        return Classification(LINEAR, out, used)
    return Classification(UNDETERMINED, out, used)
