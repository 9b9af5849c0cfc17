"""Exit criteria, one test per criterion, each logging a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from oracles import brute_force_backup, matrix_apply, running_example_one_step, two_segment_fit_residual
from qcontrol_dp.analytic import QuadCoeffs, approx_bellman, error_bound, fractional_term, lagrange_quadratic
from qcontrol_dp.cli import main
from qcontrol_dp.costs import (
    AffineTerminal,
    AngularMove,
    AngularSquaredMove,
    QuadraticMove,
    ThresholdAngularMove,
    ThresholdTerminal,
)
from qcontrol_dp.measurement import (
    MeasurementOperator,
    amplitude_damping,
    apply,
    bit_flip,
    generalized_amplitude_damping,
    mobius_coeffs,
    phase_damping,
    upward_decay,
)
from qcontrol_dp.rollout import ControlProblem, estimate_cost
from qcontrol_dp.solver import Grid, ValueFn, bellman_backup, detect_steady_state, interpolate, solve_finite_horizon
from qcontrol_dp.statespace import angular_distance

RUNNING = upward_decay(0.8)
AFFINE = (AffineTerminal(0.0), QuadraticMove(1.0))
PARAMS = (0.1, 0.36, 0.5, 0.9)


def test_01_table_oracle(acceptance_log):
    rng = np.random.default_rng(2012)
    kinds = rng.choice(["f1", "f2", "j1", "j2"], size=1000)
    ab = rng.uniform(0.001, 1.0, size=(1000, 2))
    ss = rng.random(1000)
    start = time.perf_counter()
    worst = 0.0
    for kind, (a, b), s in zip(kinds, ab, ss):
        op = MeasurementOperator(str(kind), float(a), float(b))
        s_new, p = apply(op, float(s))
        s_ref, p_ref = matrix_apply(str(kind), float(a), float(b), float(s))
        worst = max(worst, abs(p - p_ref), abs(s_new - s_ref) if p_ref > 0 else 0.0)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 1.0
    acceptance_log(1, "operator update formulas vs 2x2 matrix action", ok, f"max err {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_02_completeness(acceptance_log):
    sets = [amplitude_damping(v) for v in PARAMS] + [phase_damping(v) for v in PARAMS]
    sets += [bit_flip(v) for v in PARAMS]
    sets += [generalized_amplitude_damping(p, g) for p in PARAMS for g in PARAMS]
    worst = max(ms.completeness_defect for ms in sets)
    ok = worst < 1e-12
    acceptance_log(2, "named channels satisfy completeness", ok, f"{len(sets)} sets, max defect {worst:.2e}")
    assert ok


def test_03_one_step_closed_form(acceptance_log):
    # the brute-force oracle confirms the closed form before the solver is compared against it
    xs = np.linspace(0.0, 1.0, 11)
    ops = [("f1", 0.8, 1.0), ("j2", 0.0, 0.2)]
    oracle = [brute_force_backup(lambda s: s, ops, lambda a, b: (a - b) ** 2, float(x)) for x in xs]
    cf_v, cf_u = running_example_one_step(xs)
    assert max(abs(v - c) for (v, _), c in zip(oracle, cf_v)) < 1e-8
    assert max(abs(u - c) for (_, u), c in zip(oracle, cf_u)) < 1e-4

    g = Grid(1001)
    sol = solve_finite_horizon(*AFFINE, RUNNING, g, 1)
    value, action = running_example_one_step(g.nodes)
    v_err = float(np.max(np.abs(sol.values[0].values - value)))
    u_err = float(np.max(np.abs(sol.policies[0].actions - action)))
    ok = v_err < 2e-3 and u_err <= 2 * g.spacing
    acceptance_log(3, "one-step closed form, a=0.8, grid 1001", ok, f"value err {v_err:.2e}, policy err {u_err:.2e}")
    assert ok


def test_04_fixed_point_and_non_expansive(acceptance_log):
    g = Grid(101)
    channels = [amplitude_damping(0.36), phase_damping(0.36), generalized_amplitude_damping(0.36, 0.5), bit_flip(0.36)]
    moves = [QuadraticMove(1.0), QuadraticMove(4.0), ThresholdAngularMove(0.2, 100.0), AngularMove(),
             AngularSquaredMove()]
    fixed_err = 0.0
    for mc in moves:
        for ms in channels + [RUNNING]:
            for c in (0.0, 0.37, 12.0):
                v, _ = bellman_backup(ValueFn(g, np.full(g.n, c)), ms, mc)
                fixed_err = max(fixed_err, float(np.max(np.abs(v.values - c))))
    rng = np.random.default_rng(1)
    excess = -math.inf
    for ms in channels:
        for _ in range(100):
            J, V = rng.random(g.n), rng.random(g.n)
            tJ, _ = bellman_backup(ValueFn(g, J), ms, QuadraticMove(1.0))
            tV, _ = bellman_backup(ValueFn(g, V), ms, QuadraticMove(1.0))
            excess = max(excess, float(np.max(np.abs(tJ.values - tV.values)) - np.max(np.abs(J - V))))
    ok = fixed_err <= 1e-12 and excess <= 1e-12
    acceptance_log(4, "constant fixed point and sup-norm non-expansiveness", ok,
                   f"fixed-point err {fixed_err:.2e}, max excess {excess:.2e}")
    assert ok


def test_05_lagrange_interpolant(acceptance_log):
    rng = np.random.default_rng(5)
    u = np.linspace(0.0, 1.0, 10_000)
    # node agreement is judged relative to |N|: small c makes the numerator large (~1/c^2)
    node_err, bound_ok = 0.0, True
    for _ in range(100):
        kind = str(rng.choice(["f1", "f2"]))
        a, b = rng.uniform(0.01, 1.0, size=2)
        m = mobius_coeffs(MeasurementOperator(kind, float(a), float(b)))
        A = float(rng.uniform(-2.0, 2.0))
        N, L = fractional_term(A, m), lagrange_quadratic(A, m)
        for t in (0.0, 0.5, 1.0):
            ref = float(N.remainder(t))
            node_err = max(node_err, abs(float(L(t)) - ref) / max(1.0, abs(ref)))
        scanned = float(np.max(np.abs(N.remainder(u) - L(u))))
        bound_ok &= scanned <= error_bound(A, m)[1]
    g = Grid(1001)
    pq, report = approx_bellman(QuadCoeffs(0.0, 1.0, 0.0), RUNNING, QuadraticMove(1.0))
    numeric, _ = bellman_backup(ValueFn(g, g.nodes), RUNNING, QuadraticMove(1.0))
    exact_dev = float(np.max(np.abs(pq(g.nodes) - numeric.values)))
    ok = node_err <= 1e-12 and bound_ok and report.total_bound == 0.0 and exact_dev <= 5 * g.spacing
    acceptance_log(5, "Lagrange interpolant nodes, error bound, A=0 exactness", ok,
                   f"scaled node err {node_err:.2e}, A=0 deviation {exact_dev:.2e}")
    assert ok


def test_06_steady_state(acceptance_log):
    start = time.perf_counter()
    sol = solve_finite_horizon(*AFFINE, RUNNING, Grid(101), 50)
    i_star = detect_steady_state(sol, 1e-2)
    elapsed = time.perf_counter() - start
    ok = (
        i_star is not None
        and i_star > 10
        and bool(np.all(sol.sup_norm_diffs[: i_star + 1] < 1e-2))
        and elapsed < 5.0
    )
    acceptance_log(6, "value functions settle to a steady state, N=50", ok, f"i*={i_star}, {elapsed:.2f}s")
    assert ok


def test_07_rollout_consistency(acceptance_log):
    g = Grid(101)
    problem = ControlProblem(*AFFINE, RUNNING)
    sol = solve_finite_horizon(*AFFINE, RUNNING, g, 5)
    start = time.perf_counter()
    details, ok = [], True
    for x0 in (0.2, 0.5, 0.9):
        est = estimate_cost(sol, problem, x0, 10_000, seed=20120428)
        diff = abs(est.mean - interpolate(sol.values[0], x0))
        tol = max(3 * est.stderr, 5 * g.spacing)
        ok &= diff <= tol
        details.append(f"x0={x0}: |diff|={diff:.4f}<={tol:.4f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 10.0
    acceptance_log(7, "rollout mean matches J0", ok, "; ".join(details) + f"; {elapsed:.2f}s")
    assert ok


def test_08_policy_shape(acceptance_log):
    g = Grid(101)
    sol = solve_finite_horizon(*AFFINE, RUNNING, g, 5)
    resid = two_segment_fit_residual(g.nodes, sol.policies[0].actions)
    ok = resid < 0.02
    acceptance_log(8, "policy at i=0 is close to two affine segments", ok, f"max residual {resid:.4f}")
    assert ok


def _reachable_min(grid: Grid, steps: int, radius: float) -> float:
    """Smallest state reachable from x=1 using free moves and any measurement outcome."""
    nodes = grid.nodes
    free = angular_distance(nodes[:, None], nodes[None, :]) < radius
    reach = np.zeros(grid.n, dtype=bool)
    reach[-1] = True
    for _ in range(steps):
        actions = np.any(free[reach], axis=0)
        nxt = np.zeros(grid.n, dtype=bool)
        states, probs = RUNNING.transitions(nodes[actions])
        for s in states[probs > 0]:
            nxt[grid.nearest(s)] = True
            nxt[np.searchsorted(nodes, s, side="right") - 1] = True  # lower bracketing node too
        reach = nxt
    return float(nodes[reach].min())


def test_09_threshold_reachability(acceptance_log):
    g = Grid(101)
    sol = solve_finite_horizon(ThresholdTerminal(0.0, 0.2, 100.0), ThresholdAngularMove(0.2, 100.0), RUNNING, g, 5)
    j0 = interpolate(sol.values[0], 1.0)
    # five sub-0.2 rad moves cover < 1 rad; reaching x <= 0.2 from x = 1 needs pi - 2 asin(sqrt(0.2)) rad
    needed = math.pi - 2 * math.asin(math.sqrt(0.2))
    closest = _reachable_min(g, 5, 0.2)
    ok = j0 >= 100.0 and needed > 5 * 0.2 and closest > 0.2
    acceptance_log(9, "threshold model: x=1 cannot reach the target in 5 steps", ok,
                   f"J0(1)={j0:g}, closest reachable x={closest:.2f}, needed angle {needed:.3f} rad")
    assert ok


def test_10_cli_determinism(acceptance_log, tmp_path):
    from pathlib import Path

    cfg = str(Path(__file__).resolve().parents[1] / "configs" / "running_example.json")
    same = True
    for cmd, files in (("solve", ["values.csv"]), ("rollout", ["rollout.csv", "trajectories.csv"])):
        extra = ["--set", "dump_trajectories=5"] if cmd == "rollout" else []
        for run in ("a", "b"):
            assert main([cmd, "--config", cfg, "--out", str(tmp_path / cmd / run)] + extra) == 0
        for f in files:
            same &= (tmp_path / cmd / "a" / f).read_bytes() == (tmp_path / cmd / "b" / f).read_bytes()
    acceptance_log(10, "repeated solve/rollout runs give byte-identical CSVs", same)
    assert same
