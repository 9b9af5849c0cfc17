"""Command line entry point: ``qcontrol-dp {solve,rollout,analytic-check,compare-measurements}``.

Data files (CSV) are byte-deterministic for a fixed config; numbers are
written with 17 significant digits. The wall-clock timestamp appears only in
the JSON run summary, whose ``config`` entry can be passed back via
``--config`` to reproduce a run.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .analytic import QuadCoeffs, approx_bellman, approx_policy
from .config import ConfigError, RunConfig, build_problem, load_config, parse_override
from .costs import QuadraticMove
from .rollout import estimate_cost, simulate_trajectory, trajectory_rows
from .solver import DPSolution, ValueFn, bellman_backup, detect_steady_state, solve_finite_horizon

SELECTED_STATES = (0.0, 0.25, 0.5, 0.75, 1.0)


def fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])


def write_json(path: Path, payload: dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _summary(cfg: RunConfig, problem, **extra) -> dict[str, Any]:
    out = {
        "config": cfg.to_dict(),
        "completeness_defect": problem.measurements.completeness_defect,
        "measurement_set": problem.measurements.describe(),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    out.update(extra)
    return out


def _solve(cfg: RunConfig):
    problem, grid = build_problem(cfg)
    sol = solve_finite_horizon(
        problem.terminal, problem.move, problem.measurements, grid, cfg.steps, problem.big
    )
    return problem, grid, sol


def value_rows(sol: DPSolution):
    nodes = sol.grid.nodes
    for i, vf in enumerate(sol.values):
        acts = sol.policies[i].actions if i < sol.horizon else None
        for k, x in enumerate(nodes):
            yield (i, k, x, vf.values[k], None if acts is None else acts[k])


def cmd_solve(cfg: RunConfig, out: Path) -> dict[str, Any]:
    problem, grid, sol = _solve(cfg)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "values.csv"
    write_csv(csv_path, ("timestep", "node_index", "x", "value", "policy_action"), value_rows(sol))
    summary = _summary(
        cfg,
        problem,
        steady_state_step=detect_steady_state(sol, cfg.steady_tol),
        steady_tol=cfg.steady_tol,
        argmin_per_timestep=[float(grid.nodes[np.argmin(v.values)]) for v in sol.values],
        sup_norm_diffs=[float(d) for d in sol.sup_norm_diffs],
        cap_hit=sol.capped,
        outputs={"values": str(csv_path)},
    )
    write_json(out / "summary.json", summary)
    return summary


def cmd_rollout(cfg: RunConfig, out: Path) -> dict[str, Any]:
    problem, grid, sol = _solve(cfg)
    est = estimate_cost(sol, problem, cfg.x0, cfg.trajectories, cfg.seed, cfg.workers)
    j0 = float(sol.values[0](cfg.x0))
    out.mkdir(parents=True, exist_ok=True)
    outputs = {"rollout": str(out / "rollout.csv")}
    write_csv(
        out / "rollout.csv",
        ("x0", "mean", "stderr", "stderr_defined", "n_trajectories", "seed", "solver_value"),
        [(cfg.x0, est.mean, est.stderr, str(est.stderr_defined).lower(), est.n_trajectories, est.seed, j0)],
    )
    if cfg.dump_trajectories:
        rows = []
        for k in range(min(cfg.dump_trajectories, cfg.trajectories)):
            rows.extend(trajectory_rows(simulate_trajectory(sol, problem, cfg.x0, cfg.seed, index=k)))
        write_csv(out / "trajectories.csv", ("time", "state", "action", "outcome_index", "step_cost"), rows)
        outputs["trajectories"] = str(out / "trajectories.csv")
    summary = _summary(
        cfg,
        problem,
        seed=cfg.seed,
        mean=est.mean,
        stderr=est.stderr,
        stderr_defined=est.stderr_defined,
        n_trajectories=est.n_trajectories,
        solver_value=j0,
        abs_diff=abs(est.mean - j0),
        tolerance=max(3 * est.stderr, 5 * grid.spacing),
        cap_hit=sol.capped,
        outputs=outputs,
    )
    write_json(out / "summary.json", summary)
    return summary


def cmd_analytic_check(cfg: RunConfig, out: Path) -> dict[str, Any]:
    problem, grid = build_problem(cfg)
    if not isinstance(problem.move, QuadraticMove) or cfg.model != "affine":
        raise ConfigError("model: analytic check requires quadratic move cost")
    J = QuadCoeffs(*cfg.value_coeffs)
    x = grid.nodes
    numeric, policy = bellman_backup(ValueFn(grid, J(x)), problem.measurements, problem.move, problem.big)
    pq, report = approx_bellman(J, problem.measurements, problem.move)
    approx = pq(x)
    approx_u = approx_policy(J, problem.measurements, problem.move, x)
    diff = np.abs(approx - numeric.values)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(
        out / "comparison.csv",
        ("x", "numeric", "approx", "abs_diff", "numeric_action", "approx_action"),
        zip(x, numeric.values, approx, diff, policy.actions, approx_u),
    )
    summary = _summary(
        cfg,
        problem,
        value_coeffs=list(cfg.value_coeffs),
        max_deviation=float(diff.max()),
        grid_spacing=grid.spacing,
        operators=list(report.operators),
        endpoint_bounds=[float(b) for b in report.endpoint_bounds],
        conservative_bounds=[float(b) for b in report.conservative_bounds],
        total_bound=report.total_bound,
        total_endpoint_bound=report.total_endpoint_bound,
        within_bound=bool(diff.max() <= report.total_bound + 5 * grid.spacing),
        breakpoints=[float(b) for b in pq.breakpoints],
        pieces=[[p.A, p.B, p.C] for p in pq.pieces],
        outputs={"comparison": str(out / "comparison.csv")},
    )
    write_json(out / "summary.json", summary)
    return summary


def _without_measurement(cfg: RunConfig) -> dict[str, Any]:
    d = cfg.to_dict()
    d.pop("measurement")
    return d


def cmd_compare_measurements(cfgs: Sequence[RunConfig], out: Path) -> dict[str, Any]:
    if len(cfgs) < 2:
        raise ConfigError("config: compare-measurements needs at least two configs")
    base = _without_measurement(cfgs[0])
    for k, cfg in enumerate(cfgs[1:], start=1):
        other = _without_measurement(cfg)
        diff = sorted(key for key in base if base[key] != other[key])
        if diff:
            raise ConfigError(f"{diff[0]}: config {k} differs from config 0 outside the measurement set")
    rows = []
    for k, cfg in enumerate(cfgs):
        problem, grid, sol = _solve(cfg)
        j0 = sol.values[0]
        rows.append(
            (k, problem.measurements.describe(), problem.measurements.completeness_defect,
             float(np.max(np.abs(j0.values))), *(float(j0(s)) for s in SELECTED_STATES))
        )
    out.mkdir(parents=True, exist_ok=True)
    header = ("config_index", "measurement_set", "completeness_defect", "sup_norm_J0") + tuple(
        f"J0_at_{s:g}" for s in SELECTED_STATES
    )
    write_csv(out / "comparison.csv", header, rows)
    summary = {
        "configs": [c.to_dict() for c in cfgs],
        "rows": [dict(zip(header, r)) for r in rows],
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "outputs": {"comparison": str(out / "comparison.csv")},
    }
    write_json(out / "summary.json", summary)
    return summary


def _resolve(path: str, args: argparse.Namespace) -> RunConfig:
    cfg = load_config(path)
    changes: dict[str, Any] = {}
    for key, attr in (("seed", "seed"), ("grid_n", "grid"), ("steps", "steps")):
        v = getattr(args, attr)
        if v is not None:
            changes[key] = v
    for text in args.set or ():
        key, value = parse_override(text)
        changes[key] = value
    return cfg.replace(**changes) if changes else cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qcontrol-dp", description="Finite-horizon dynamic programming for qubit state preparation."
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "backward induction; writes values.csv"),
        ("rollout", "solve, then Monte Carlo estimate of the expected total cost"),
        ("analytic-check", "numeric backup vs the closed-form piecewise-quadratic step"),
        ("compare-measurements", "J0 table across configs differing only in measurement set"),
    ):
        sp = sub.add_parser(name, help=help_text)
        if name == "compare-measurements":
            sp.add_argument("--config", required=True, nargs="+", help="two or more config files")
        else:
            sp.add_argument("--config", required=True, help="JSON config (or a run summary)")
        sp.add_argument("--out", default="out", help="output directory (default: out)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--grid", type=int, help="number of grid nodes")
        sp.add_argument("--steps", type=int, help="horizon N")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        if args.command == "compare-measurements":
            summary = cmd_compare_measurements([_resolve(c, args) for c in args.config], out)
        else:
            cfg = _resolve(args.config, args)
            cmd = {"solve": cmd_solve, "rollout": cmd_rollout, "analytic-check": cmd_analytic_check}
            summary = cmd[args.command](cfg, out)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = {k: v for k, v in summary.items() if k not in ("config", "configs", "sup_norm_diffs")}
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
