"""Run the shipped configs through the CLI and collect the headline numbers.

Usage: python3 scripts/reproduce.py [--out reproduction]

Per-run outputs land in ``<out>/<run>/``; ``<out>/summary.json`` gathers the
figures quoted in the README (steady-state step, rollout checks, analytic
bounds, measurement comparison).
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
from pathlib import Path

from qcontrol_dp.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(args: list[str]) -> None:
    with contextlib.redirect_stdout(io.StringIO()):
        code = main(args)
    if code != 0:
        raise SystemExit(f"command failed: {' '.join(args)}")


def load(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


def reproduce(out: Path) -> dict:
    running = str(CONFIGS / "running_example.json")
    run(["solve", "--config", running, "--out", str(out / "running_solve")])
    run(["solve", "--config", str(CONFIGS / "steady_state.json"), "--out", str(out / "steady_state")])
    run(["solve", "--config", str(CONFIGS / "threshold.json"), "--out", str(out / "threshold")])
    run(["analytic-check", "--config", running, "--out", str(out / "analytic")])
    run(["analytic-check", "--config", running, "--out", str(out / "analytic_quadratic"),
         "--set", "value_coeffs=[1, 0, 0]"])
    rollouts = []
    for x0 in (0.2, 0.5, 0.9):
        dest = out / f"rollout_x0_{x0:g}"
        run(["rollout", "--config", running, "--out", str(dest), "--set", f"x0={x0}"])
        s = load(dest / "summary.json")
        rollouts.append({k: s[k] for k in ("mean", "stderr", "solver_value", "abs_diff", "tolerance")} | {"x0": x0})
    run(["compare-measurements", "--config", running, str(CONFIGS / "compare_gad.json"),
         "--out", str(out / "compare")])

    steady = load(out / "steady_state" / "summary.json")
    threshold = load(out / "threshold" / "summary.json")
    analytic = load(out / "analytic" / "summary.json")
    analytic_q = load(out / "analytic_quadratic" / "summary.json")
    compare = load(out / "compare" / "summary.json")
    j0_threshold = [r for r in (out / "threshold" / "values.csv").read_text().splitlines()[1:]
                    if r.startswith("0,") and r.split(",")[2] == "1"]
    return {
        "steady_state": {
            "steps": steady["config"]["steps"],
            "tol": steady["steady_tol"],
            "i_star": steady["steady_state_step"],
            "sup_norm_diffs": steady["sup_norm_diffs"],
        },
        "threshold_J0_at_1": float(j0_threshold[0].split(",")[3]),
        "rollout": rollouts,
        "analytic": {
            name: {k: rep[k] for k in ("value_coeffs", "max_deviation", "total_bound", "total_endpoint_bound",
                                       "within_bound", "breakpoints", "pieces")}
            for name, rep in (("linear", analytic), ("quadratic", analytic_q))
        },
        "compare_measurements": compare["rows"],
    }


def cli() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="reproduction")
    out = Path(p.parse_args().out)
    out.mkdir(parents=True, exist_ok=True)
    summary = reproduce(out)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(f"steady-state step i* = {summary['steady_state']['i_star']}")
    print(f"threshold model J0(1) = {summary['threshold_J0_at_1']:g}")
    for r in summary["rollout"]:
        print(f"rollout x0={r['x0']}: mean {r['mean']:.4f} +- {r['stderr']:.4f}, J0 {r['solver_value']:.4f}")
    print(f"wrote {out / 'summary.json'}")


if __name__ == "__main__":
    cli()
