"""Reference management, single runs, sweeps, the stability comparison and certification."""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import certificates as cert
from ..alm import EXPLICIT, STABLE, DualEnergyOracle, alm_run, reference_solve
from ..newton import NewtonError
from ..problems import make_problem
from . import io
from .classify import LINEAR, SUBLINEAR, SUPERLINEAR, classify
from .config import ExperimentConfig, SweepConfig

log = logging.getLogger(__name__)

REFERENCE_PROTOCOL = {"r": 2.0, "epsilon": 1.0, "dual_update": STABLE, "min_iterations": 1000,
                      "inner_tol": 1e-13, "patience": 50, "initial_guess": "zero"}


class SolverFailure(RuntimeError):
    """An outer or inner solve failed; partial output may have been written."""


class MissingReference(RuntimeError):
    """No cached reference exists and the caller did not allow running without one."""


@dataclass
class ReferenceResult:
    path: Path
    solution: io.ReferenceSolution
    cache_hit: bool
    solver_iterations: int


def reference_path(problem_spec: dict, reference_dir) -> Path:
    return Path(reference_dir) / f"{io.fingerprint(problem_spec)}.json"


def compute_reference(problem_spec: dict, reference_dir) -> ReferenceResult:
    """Return the cached reference for ``problem_spec`` or compute and persist it."""
    spec = make_problem(problem_spec).spec()
    fp = io.fingerprint(spec)
    path = reference_path(spec, reference_dir)
    if path.exists():
        try:
            return ReferenceResult(path, io.load_reference(path, fp), True, 0)
        except io.ReferenceIntegrityError as exc:
            log.warning("discarding reference: %s", exc)
    problem = make_problem(spec)
    try:
        run = reference_solve(problem, REFERENCE_PROTOCOL["min_iterations"], REFERENCE_PROTOCOL["inner_tol"],
                              REFERENCE_PROTOCOL["patience"])
    except NewtonError as exc:
        raise SolverFailure(f"reference solve failed: {exc}") from exc
    protocol = dict(REFERENCE_PROTOCOL, iterations=run.iterations, kkt_residual_before_polish=run.kkt_before_polish,
                    kkt_residual=run.kkt_after_polish)
    sol = io.ReferenceSolution(fp, spec, run.u, run.lam, protocol)
    path.parent.mkdir(parents=True, exist_ok=True)
    io.save_reference(path, sol)
    return ReferenceResult(path, io.load_reference(path, fp), False, run.iterations)


def _reference_dir(cfg, out_dir) -> Path:
    return Path(cfg.reference_dir) if cfg.reference_dir else Path(out_dir) / "references"


def _resolve_reference(cfg: ExperimentConfig, out_dir, use_reference: bool, create: bool):
    if not use_reference:
        return None
    ref_dir = _reference_dir(cfg, out_dir)
    path = reference_path(cfg.problem, ref_dir)
    if not create:
        if not path.exists():
            raise MissingReference(f"no reference at {path}; run the 'reference' command or pass --no-reference")
        try:
            return io.load_reference(path, io.fingerprint(cfg.problem))
        except io.ReferenceIntegrityError as exc:
            raise MissingReference(f"unusable reference: {exc}") from exc
    return compute_reference(cfg.problem, ref_dir).solution


@dataclass
class RunResult:
    csv_path: Path
    trace: object
    reference: io.ReferenceSolution | None
    failure: str | None


def _write_provenance(out_dir: Path, cfg, reference, extra=None):
    prov = {"config": cfg.to_dict(), "seed": cfg.problem.get("seed"),
            "reference_fingerprint": None if reference is None else reference.fingerprint}
    if extra:
        prov.update(extra)
    (out_dir / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    (out_dir / "provenance.json").write_text(json.dumps(prov, indent=2, sort_keys=True) + "\n")


def run_experiment(cfg: ExperimentConfig, out_dir, use_reference: bool = True, create_reference: bool = False,
                   track_dual_energy: bool = True, csv_name: str = "trace.csv") -> RunResult:
    """Run one ALM experiment and write ``trace.csv`` plus provenance into ``out_dir``.

    A solver failure still writes the partial CSV; callers decide how to report it.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ref = _resolve_reference(cfg, out_dir, use_reference, create_reference)
    problem = make_problem(cfg.problem)
    trace = alm_run(problem, None, cfg.alm_config(), reference=None if ref is None else (ref.u, ref.lam),
                    track_dual_energy=track_dual_energy and ref is not None)
    path = io.write_trace_csv(out_dir / csv_name, io.trace_rows(trace))
    _write_provenance(out_dir, cfg, ref, {"failure": trace.failure})
    return RunResult(path, trace, ref, trace.failure)


def problem_exponent(spec: dict) -> float | None:
    """Convexity exponent ``p`` of the dual energy, if the problem family determines it."""
    if spec["kind"] == "quadratic":
        return 2.0
    if "s" in spec:
        return cert.p_for_data_fitting(spec["s"])
    return None


def expected_regime(r: float, p: float | None) -> str | None:
    if p is None:
        return None
    if math.isclose(r, p):
        return LINEAR
    return SUPERLINEAR if r > p else SUBLINEAR


def _final(col):
    col = np.asarray(col, dtype=float)
    return None if col.size == 0 or np.isnan(col[-1]) else float(col[-1])


def _summarise(cfg: ExperimentConfig, res: RunResult, out_dir: Path) -> dict:
    tr = res.trace
    p = problem_exponent(cfg.problem)
    entry = {"r": cfg.r, "epsilon": cfg.epsilon, "csv": str(res.csv_path.relative_to(out_dir)),
             "iterations": len(tr) - 1, "failure": res.failure,
             "final_feasibility": _final(tr.column("feasibility")),
             "final_primal_err": _final(tr.column("primal_err")),
             "final_dual_err": _final(tr.column("dual_err")),
             "expected_regime": expected_regime(cfg.r, p)}
    if res.reference is not None:
        cls = classify(tr.column("dual_err"))
        entry["regime"] = cls.regime
        entry["primal_regime"] = classify(tr.column("primal_err")).regime
    return entry


def _sweep_point(args):
    cfg, out_dir, ref_dir = args
    cfg = cfg.with_(reference_dir=str(ref_dir))
    run_dir = Path(out_dir) / f"r={cfg.r:g}_eps={cfg.epsilon:g}"
    res = run_experiment(cfg, run_dir, use_reference=ref_dir is not None, track_dual_energy=False)
    return _summarise(cfg, res, Path(out_dir))


def sweep(cfg: SweepConfig, out_dir, jobs: int = 1, use_reference: bool = True) -> dict:
    """One run per (r, eps) grid point; returns and writes ``summary.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points = cfg.points()
    ref_dir = None
    if use_reference and points:
        ref_dir = Path(cfg.reference_dir) if cfg.reference_dir else out_dir / "references"
        compute_reference(cfg.problem, ref_dir)
    tasks = [(pt, out_dir, ref_dir) for pt in points]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_sweep_point, tasks))
    else:
        runs = [_sweep_point(t) for t in tasks]
    summary = {"problem": cfg.problem, "grid": "default" if cfg.default_grid else "custom",
               "r_values": list(cfg.r_values), "epsilon_values": list(cfg.epsilon_values),
               "n_iters": cfg.n_iters, "dual_update": cfg.dual_update,
               "reference_fingerprint": io.fingerprint(cfg.problem) if ref_dir else None,
               "runs": runs, "failed": any(r["failure"] for r in runs)}
    (out_dir / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def stability_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    """Run the explicit and the stable dual update with otherwise identical settings."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ref_dir = _reference_dir(cfg, out_dir)
    compute_reference(cfg.problem, ref_dir)
    results = {}
    for kind in (EXPLICIT, STABLE):
        run_cfg = cfg.with_(dual_update=kind, reference_dir=str(ref_dir),
                            label=f"{kind} update")
        results[kind] = run_experiment(run_cfg, out_dir / kind, track_dual_energy=False,
                                       csv_name=f"{kind}.csv")
    e_exp = results[EXPLICIT].trace.column("dual_err")
    e_st = results[STABLE].trace.column("dual_err")
    first = None
    for k in range(min(e_exp.size, e_st.size)):
        if e_exp[k] > 10.0 * e_st[k]:
            first = k
            break
    comparison = {"first_iteration_explicit_exceeds_10x_stable": first,
                  "final_dual_err_explicit": _final(e_exp), "final_dual_err_stable": _final(e_st),
                  "failure_explicit": results[EXPLICIT].failure, "failure_stable": results[STABLE].failure,
                  "csv_explicit": str(results[EXPLICIT].csv_path.relative_to(out_dir)),
                  "csv_stable": str(results[STABLE].csv_path.relative_to(out_dir))}
    (out_dir / "comparison.json").write_text(json.dumps(comparison, indent=2, sort_keys=True) + "\n")
    return comparison


def convexity_params(problem, trace) -> cert.ConvexityParams:
    """Exact dual constants for quadratics, otherwise an empirical estimate along the trace."""
    try:
        return cert.quadratic_dual_params(problem)
    except ValueError:
        pass
    p = problem_exponent(problem.spec()) or 2.0
    lams = trace.multipliers
    idx = np.unique(np.linspace(0, len(lams) - 1, min(len(lams), 8)).astype(int))
    return cert.empirical_mu(DualEnergyOracle(problem), lams[idx], p)


def _gap_column(trace):
    z = trace.column("dual_gap")
    scale = 1e-12 * (1.0 + abs(trace.reference_energy or 0.0))
    if np.any(z < -scale):
        raise SolverFailure(f"dual gap {z.min():.3e} is negative beyond rounding; reference not optimal")
    return np.maximum(z, 0.0)


def certify(cfg: ExperimentConfig, out_dir, theorems=None, slack_rel: float = 1e-8) -> dict:
    """Run the experiment with dual-energy tracking and check the selected rate bounds.

    The regime check (linear / superlinear / sublinear) follows from r versus p
    unless ``theorems`` names checks explicitly.
    """
    out_dir = Path(out_dir)
    res = run_experiment(cfg, out_dir, create_reference=True, track_dual_energy=True)
    if res.failure:
        raise SolverFailure(res.failure)
    problem = make_problem(cfg.problem)
    trace = res.trace
    params = convexity_params(problem, trace)
    z = _gap_column(trace)
    slack = slack_rel * (1.0 + z[0])
    r, eps = cfg.r, cfg.epsilon
    if theorems is None:
        theorems = [expected_regime(r, params.p), cert.PRIMAL_BREGMAN, cert.DUAL_DESCENT]
    reports = []
    for th in theorems:
        if th == cert.LINEAR:
            rep = cert.check_linear(z, params, eps, slack)
        elif th == cert.SUPERLINEAR:
            rep = cert.check_superlinear(z, params, eps, r, slack)
        elif th == cert.SUBLINEAR:
            rep = cert.check_sublinear(z, params, eps, r, slack)
        elif th == cert.PRIMAL_BREGMAN:
            rep = cert.check_primal_bregman(trace.column("dfsym"), z, params, eps, r, slack)
        elif th == cert.DUAL_DESCENT:
            e0 = trace.column("dual_energy")
            rep = cert.check_dual_descent(e0, trace.multipliers, eps, r, slack=slack_rel * (1.0 + abs(e0[0])))
            rep.advisory = not params.exact
        else:
            raise ValueError(f"unknown theorem {th!r}")
        reports.append(rep.to_dict())
    hard_fail = any(not rep["passed"] and not rep["advisory"] for rep in reports)
    doc = {"config": cfg.to_dict(), "params": {"p": params.p, "mu": params.mu, "exact": params.exact},
           "reports": reports, "passed": all(rep["passed"] for rep in reports),
           "advisory_warning": any(not rep["passed"] and rep["advisory"] for rep in reports),
           "hard_failure": hard_fail}
    (out_dir / "certificates.json").write_text(json.dumps(cert._jsonable(doc), indent=2, sort_keys=True) + "\n")
    return doc
