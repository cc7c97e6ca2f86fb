"""End-to-end experiment orchestration and reporting.

A run executes: oracle (assumptions, regulator equations, policy iteration on
the true model), one exploration simulation, data-matrix assembly, the
selected data-driven algorithm(s), regulator recovery, a closed-loop
evaluation simulation, and a report.  Every error metric in the report is
recomputed here from the stored artifacts; nothing is cached inside the
learner.

Outputs: ``report.json`` plus ``iterations.csv`` and ``tracking.csv`` (and
optionally ``trajectory.csv``).  The CSVs are byte-reproducible for a given
config and seed; wall-clock timings are therefore reported only in the
JSON document (under ``timings``) and the ``wallclock_ms`` CSV column is
left empty.
"""

import json
import os
import time
from dataclasses import dataclass, is_dataclass, asdict

import numpy as np

from .basis import build_basis, sylvester_images
from .config import config_to_dict
from .errors import AoregError
from .excitation import (
    build_data_matrices,
    check_rank_refined,
    export_trajectory,
    original_rank_diagnostics,
    simulate,
    simulate_closed_loop,
    tracking_error,
)
from .learner import (
    assemble_regulator_lsq,
    learn_original,
    learn_refined,
    learned_controller,
    monotonicity_margin,
)
from .oracle import (
    check_assumptions,
    solve_are_kleinman,
    solve_regulator,
    synthesize_controller,
)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def _fmt(x):
    return f"{x:.17g}"


@dataclass
class ExperimentResult:
    """Report dict plus the raw series needed for the CSV outputs."""

    report: dict
    tracking_series: dict  # algorithm -> (times, error rows)
    log: object  # exploration TrajectoryLog or None

    @property
    def exit_code(self):
        return self.report["exit_code"]

    def write(self, out_dir, emit_trajectory=False):
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
            json.dump(_jsonable(self.report), fh, indent=2, sort_keys=True)
            fh.write("\n")
        self._write_iterations(os.path.join(out_dir, "iterations.csv"))
        self._write_tracking(out_dir)
        if emit_trajectory and self.log is not None:
            export_trajectory(self.log, os.path.join(out_dir, "trajectory.csv"))

    def _write_iterations(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("algorithm,j,dP,dK_vs_oracle,wallclock_ms,solve_cols\n")
            for alg in ("original", "refined"):
                section = self.report["algorithms"].get(alg)
                if not section or "iterations" not in section:
                    continue
                for row in section["iterations"]:
                    dp = _fmt(row["dP"]) if row["dP"] is not None else ""
                    dk = _fmt(row["dK_vs_oracle"]) if row["dK_vs_oracle"] is not None else ""
                    fh.write(f"{alg},{row['j']},{dp},{dk},,{row['solve_cols']}\n")

    def _write_tracking(self, out_dir):
        primary = "refined" if "refined" in self.tracking_series else "original"
        for alg, (times, err) in self.tracking_series.items():
            name = "tracking.csv" if alg == primary else f"tracking_{alg}.csv"
            with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
                p = err.shape[1]
                fh.write("t," + ",".join(f"e{i + 1}" for i in range(p)) + "\n")
                for k in range(times.size):
                    fh.write(
                        ",".join([_fmt(times[k]), *(_fmt(e) for e in err[k])]) + "\n"
                    )


def _check(checks, name, passed, detail=""):
    checks.append({"name": name, "passed": bool(passed), "detail": detail})
    return passed


def _selected(config, override=None):
    choice = override or config.algorithm
    if choice not in ("original", "refined", "both"):
        raise ValueError(f"unknown algorithm selector {choice!r}")
    return ("original", "refined") if choice == "both" else (choice,)


def _iteration_rows(result, K_star):
    rows = []
    prev_P = None
    for it in result.history:
        dP = None if prev_P is None else float(np.linalg.norm(it.P - prev_P))
        dK = None if K_star is None else float(np.linalg.norm(it.K - K_star))
        rows.append(
            {"j": it.j, "dP": dP, "dK_vs_oracle": dK, "solve_cols": result.solve_cols[len(rows)]}
        )
        prev_P = it.P
    return rows


def _run_algorithm(alg, config, data, basis, oracle_ctx, checks, timings):
    """Learn, recover the regulator solution, evaluate; return report section."""
    plant, exo, weights = config.plant, config.exo, config.weights
    section = {}
    tic = time.perf_counter()
    learn = learn_original if alg == "original" else learn_refined
    try:
        result = learn(data, plant.C, weights, config.K0, config.learner)
    except AoregError as exc:
        _check(checks, f"learn[{alg}]", False, str(exc))
        section["error"] = str(exc)
        return section, None
    timings[f"{alg}_learn_s"] = time.perf_counter() - tic
    timings[f"{alg}_iteration_s"] = result.iter_seconds
    _check(checks, f"learn[{alg}]", True, f"converged at j*={result.j_star}")

    K_star = oracle_ctx.get("K_star")
    section["j_star"] = result.j_star
    section["iterations"] = _iteration_rows(result, K_star)
    section["solve_cols"] = result.solve_cols
    section["sylvester_cols"] = result.sylvester_cols
    section["P"] = result.P
    section["K"] = result.K
    section["D_hat"] = result.model.D_hat
    section["history_P"] = [it.P for it in result.history]

    tol_mono = config.learner.tol_mono
    if tol_mono is None:
        tol_mono = 1e-6 * np.linalg.norm(result.history[0].P)
    step_margin, _ = monotonicity_margin(result.history)
    section["monotonicity_margin"] = float(step_margin)
    _check(
        checks, f"monotone[{alg}]", step_margin >= -tol_mono,
        f"min eig(P_j - P_j+1) = {step_margin:.3e} (tol {tol_mono:.3e})",
    )

    try:
        assembly, reg = assemble_regulator_lsq(
            basis, result.model, result.P, result.K, weights.R,
            config.learner.rank_tol, config.evaluation.residual_tol,
        )
        ctrl = learned_controller(result.K, reg)
    except AoregError as exc:
        _check(checks, f"regulator-residual[{alg}]", False, str(exc))
        section["error"] = str(exc)
        return section, None
    section["regulator"] = {
        "X": reg.X, "U": reg.U, "alpha": reg.alpha,
        "residual": assembly.residual_norm, "rank": assembly.numerical_rank,
    }
    section["controller"] = {"K": ctrl.K, "L": ctrl.L}
    _check(
        checks, f"regulator-residual[{alg}]", assembly.residual_ok,
        f"|A chi - b| = {assembly.residual_norm:.3e}",
    )

    # error metrics against ground truth, recomputed from the artifacts
    if K_star is not None:
        sol = oracle_ctx["oracle"]
        reg_star = oracle_ctx["regulator"]
        S_true = oracle_ctx["sylvester"].S
        K_err = np.linalg.norm(ctrl.K - sol.K_star) / np.linalg.norm(sol.K_star)
        L_err = np.linalg.norm(ctrl.L - oracle_ctx["controller"].L) / max(
            1.0, np.linalg.norm(oracle_ctx["controller"].L)
        )
        X_err = np.linalg.norm(reg.X - reg_star.X)
        X_bound = config.evaluation.regulator_rtol * (1.0 + np.linalg.norm(reg_star.X))
        D_err = np.linalg.norm(result.model.D_hat - plant.D)
        S_errs = [
            float(np.linalg.norm(Sh - St) / (1.0 + np.linalg.norm(St)))
            for Sh, St in zip(result.model.S_hat, S_true)
        ]
        section["errors_vs_oracle"] = {
            "K_rel": float(K_err), "L_rel": float(L_err), "X_abs": float(X_err),
            "U_abs": float(np.linalg.norm(reg.U - reg_star.U)),
            "D_abs": float(D_err), "S_rel": S_errs,
        }
        _check(
            checks, f"gain-error[{alg}]", K_err <= config.evaluation.gain_rtol,
            f"|K - K*|/|K*| = {K_err:.3e}",
        )
        _check(
            checks, f"regulator-error[{alg}]", X_err <= X_bound,
            f"|X - X*| = {X_err:.3e} (bound {X_bound:.3e})",
        )

    # closed-loop evaluation with the learned controller
    eval_cfg = config.evaluation
    try:
        eval_log = simulate_closed_loop(
            plant, exo, ctrl, eval_cfg.horizon, config.schedule.integration_dt,
            config.x0, config.v0,
        )
    except AoregError as exc:
        _check(checks, f"tracking[{alg}]", False, str(exc))
        return section, None
    err = tracking_error(plant, eval_log)
    settled = eval_log.times >= eval_cfg.settle_time
    metric = float(np.max(np.linalg.norm(err[settled], axis=1)))
    bound = eval_cfg.tracking_tol * (1.0 + np.linalg.norm(config.x0))
    section["tracking"] = {
        "metric": metric, "bound": bound,
        "settle_time": eval_cfg.settle_time, "horizon": eval_cfg.horizon,
    }
    _check(
        checks, f"tracking[{alg}]", metric <= bound,
        f"max |e(t)| for t >= {eval_cfg.settle_time:g}s = {metric:.3e} (bound {bound:.3e})",
    )
    return section, (eval_log.times, err)


def _comparison(report, config, timings):
    """Side-by-side complexity table; requires both algorithm sections."""
    orig = report["algorithms"].get("original", {})
    ref = report["algorithms"].get("refined", {})
    if "iterations" not in orig or "iterations" not in ref:
        return None
    h = config.h
    agreement = []
    for Po, Pr in zip(orig["history_P"], ref["history_P"]):
        Po = np.asarray(Po)
        Pr = np.asarray(Pr)
        agreement.append(
            {
                "abs": float(np.linalg.norm(Po - Pr)),
                "rel": float(np.linalg.norm(Po - Pr) / max(np.linalg.norm(Po), 1e-300)),
            }
        )
    ctrl_o, ctrl_r = orig["controller"], ref["controller"]
    K_diff = float(
        np.linalg.norm(np.asarray(ctrl_o["K"]) - np.asarray(ctrl_r["K"]))
        / max(np.linalg.norm(np.asarray(ctrl_o["K"])), 1e-300)
    )
    L_diff = float(
        np.linalg.norm(np.asarray(ctrl_o["L"]) - np.asarray(ctrl_r["L"]))
        / max(np.linalg.norm(np.asarray(ctrl_o["L"])), 1e-300)
    )
    return {
        "solve_cols": {
            "original": orig["solve_cols"],
            "refined": ref["solve_cols"],
            "refined_step2": ref["sylvester_cols"],
        },
        "rank_conditions": {
            "original": {"full": h + 2},
            "refined": {"full": 1, "reduced": h + 1},
        },
        "per_iteration_seconds": {
            "original": timings.get("original_iteration_s", []),
            "refined": timings.get("refined_iteration_s", []),
        },
        "iterate_agreement": agreement,
        "controller_agreement": {"K_rel": K_diff, "L_rel": L_diff},
    }


def run_experiment(config, seed=0, algorithm=None):
    """Execute a full experiment and return an :class:`ExperimentResult`.

    ``algorithm`` overrides the config's selector when given.  Exit code 0
    means every enabled check passed; 1 means at least one failed.
    """
    checks = []
    timings = {}
    t_total = time.perf_counter()
    plant, exo, weights = config.plant, config.exo, config.weights
    report = {
        "seed": seed,
        "config": config_to_dict(config),
        "warnings": list(config.warnings),
        "algorithms": {},
    }

    diag = check_assumptions(plant, exo, weights)
    report["assumptions"] = diag
    _check(
        checks, "assumptions", diag.all_pass,
        "stabilizable/observable/regulator-solvable = "
        f"{diag.stabilizable}/{diag.observable}/{diag.regulator_solvable}",
    )

    oracle_ctx = {}
    if diag.all_pass:
        tic = time.perf_counter()
        try:
            sol, ohist = solve_are_kleinman(plant, weights, config.K0)
            reg_star = solve_regulator(plant, exo)
            ctrl_star = synthesize_controller(sol.K_star, reg_star)
            basis = build_basis(plant.C, plant.F, plant.q, config.learner.rank_tol)
            oracle_ctx = {
                "oracle": sol,
                "K_star": sol.K_star,
                "history": ohist,
                "regulator": reg_star,
                "controller": ctrl_star,
                "basis": basis,
                "sylvester": sylvester_images(plant.A, exo.E, basis),
            }
            report["oracle"] = {
                "P_star": sol.P_star,
                "K_star": sol.K_star,
                "L_star": ctrl_star.L,
                "X": reg_star.X,
                "U": reg_star.U,
                "iterations": sol.iterations_used,
            }
            _check(checks, "oracle", True, f"Kleinman converged in {sol.iterations_used} steps")
        except AoregError as exc:
            _check(checks, "oracle", False, str(exc))
        timings["oracle_s"] = time.perf_counter() - tic

    result_obj = ExperimentResult(report, {}, None)
    if not oracle_ctx:
        report["exit_code"] = 1
        report["checks"] = checks
        report["timings"] = timings
        return result_obj

    basis = oracle_ctx["basis"]
    tic = time.perf_counter()
    try:
        log = simulate(plant, exo, config.excitation, config.schedule, config.x0, config.v0)
        result_obj.log = log
        data = build_data_matrices(log, basis, config.schedule)
        _check(checks, "simulation", True, f"{log.times.size} grid points")
    except AoregError as exc:
        _check(checks, "simulation", False, str(exc))
        report["exit_code"] = 1
        report["checks"] = checks
        report["timings"] = timings
        return result_obj
    timings["simulate_s"] = time.perf_counter() - tic

    algs = _selected(config, algorithm)
    report["selected_algorithms"] = list(algs)
    rank_report = {}
    rank_ok = {}
    if "original" in algs:
        d = original_rank_diagnostics(data, config.learner.rank_tol)
        rank_report["original"] = d
        rank_ok["original"] = d.all_required_pass
        _check(
            checks, "rank[original]", d.all_required_pass,
            f"{len(d.failed())} of {len(d.entries)} full-size conditions failed"
            if not d.all_required_pass else f"{len(d.entries)} full-size conditions hold",
        )
    if "refined" in algs:
        d = check_rank_refined(data, config.learner.rank_tol)
        rank_report["refined"] = d
        rank_ok["refined"] = d.all_required_pass
        failed = d.failed()
        _check(
            checks, "rank[refined]", d.all_required_pass,
            f"failed: {', '.join(e.name for e in failed)}" if failed
            else "1 full-size + reduced conditions hold",
        )
    report["rank"] = rank_report

    for alg in algs:
        if not rank_ok[alg]:
            _check(checks, f"learn[{alg}]", False, "skipped: rank conditions failed")
            report["algorithms"][alg] = {"error": "rank conditions failed"}
            continue
        section, tracking = _run_algorithm(
            alg, config, data, basis, oracle_ctx, checks, timings
        )
        report["algorithms"][alg] = section
        if tracking is not None:
            result_obj.tracking_series[alg] = tracking

    if len(algs) == 2:
        comparison = _comparison(report, config, timings)
        if comparison is not None:
            report["comparison"] = comparison

    timings["total_s"] = time.perf_counter() - t_total
    report["timings"] = timings
    report["checks"] = checks
    report["exit_code"] = 0 if all(c["passed"] for c in checks) else 1
    return result_obj


def compare_report(report):
    """Return the algorithm-comparison table; reject single-algorithm reports."""
    if "comparison" not in report or report["comparison"] is None:
        raise ValueError("comparison requires a report in which both algorithms ran")
    return report["comparison"]


def format_comparison(comparison):
    """Plain-text rendering of the comparison table."""
    lines = ["algorithm comparison:"]
    sc = comparison["solve_cols"]
    lines.append(f"  unknowns per iteration: original={sc['original']}, refined={sc['refined']}")
    lines.append(f"  refined per-image solves: {sc['refined_step2']}")
    rc = comparison["rank_conditions"]
    lines.append(
        f"  rank conditions: original={rc['original']['full']} full-size; "
        f"refined={rc['refined']['full']} full-size + {rc['refined']['reduced']} reduced"
    )
    secs = comparison["per_iteration_seconds"]
    for alg in ("original", "refined"):
        if secs.get(alg):
            lines.append(
                f"  {alg} per-iteration wall clock: "
                + ", ".join(f"{t * 1e3:.2f} ms" for t in secs[alg])
            )
    for j, row in enumerate(comparison["iterate_agreement"]):
        lines.append(f"  |P_orig - P_ref| at j={j}: {row['abs']:.3e} (rel {row['rel']:.3e})")
    ca = comparison["controller_agreement"]
    lines.append(f"  controller agreement: dK/|K|={ca['K_rel']:.3e}, dL/|L|={ca['L_rel']:.3e}")
    return "\n".join(lines)
