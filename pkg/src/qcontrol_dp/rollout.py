"""Monte Carlo rollouts of the closed control loop.

Each step: look up the action for the current state, pay the move cost,
measure, land on the outcome's post-state. After ``N`` steps the terminal
cost is paid.

Randomness: trajectory ``k`` of a run seeded with ``seed`` draws its
uniforms from ``Philox(key=seed, counter=[0, 0, k, 0])``. Draws only
advance the low counter word, so streams of different trajectories never
overlap, and a trajectory's stream does not depend on how the batch is
split across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .costs import BigValue, MoveCost, TerminalCost, move, terminal
from .measurement import MeasurementSet
from .solver import DPSolution, Policy
from .statespace import check_param

PROB_SUM_TOL = 1e-8
CHUNK = 2048
_KEY_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class ControlProblem:
    terminal: TerminalCost
    move: MoveCost
    measurements: MeasurementSet
    big: BigValue = BigValue()


@dataclass(frozen=True)
class TrajectoryStep:
    time: int
    state: float
    action: float
    outcome_index: int
    step_cost: float


@dataclass(frozen=True)
class TrajectoryRecord:
    steps: tuple[TrajectoryStep, ...]
    terminal_state: float
    terminal_cost: float
    total_cost: float


@dataclass(frozen=True)
class RolloutEstimate:
    mean: float
    stderr: float
    n_trajectories: int
    seed: int
    stderr_defined: bool = True


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    if seed < 0 or index < 0:
        raise ValueError("seed and trajectory index must be nonnegative")
    key = [seed & _KEY_MASK, (seed >> 64) & _KEY_MASK]
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, index, 0]))


def _uniforms(seed: int, start: int, stop: int, N: int) -> np.ndarray:
    return np.stack([trajectory_rng(seed, k).random(N) for k in range(start, stop)])


def _sample_outcomes(probs: np.ndarray, draws: np.ndarray) -> np.ndarray:
    """Inverse-CDF pick over the ordered outcome list, one draw per column."""
    total = probs.sum(axis=0)
    if np.any(np.abs(total - 1.0) > PROB_SUM_TOL):
        raise ValueError(f"outcome probabilities sum to {total.min():.12g}..{total.max():.12g}, not 1")
    cum = np.cumsum(probs, axis=0) / total
    idx = np.sum(draws[None, :] >= cum, axis=0)
    return np.minimum(idx, probs.shape[0] - 1)


def _run_batch(policies: Sequence[Policy], problem: ControlProblem, x0: float, draws: np.ndarray):
    n, N = draws.shape
    mset = problem.measurements
    x = np.full(n, float(x0))
    states = np.empty((n, N))
    actions = np.empty((n, N))
    outcomes = np.empty((n, N), dtype=int)
    costs = np.empty((n, N))
    cols = np.arange(n)
    for i in range(N):
        u = policies[i].action(x)
        states[:, i] = x
        actions[:, i] = u
        costs[:, i] = move(problem.move, x, u)
        post, probs = mset.transitions(u)
        k = _sample_outcomes(probs, draws[:, i])
        outcomes[:, i] = k
        x = post[k, cols]
    final = np.asarray(terminal(problem.terminal, x), dtype=float)
    total = costs.sum(axis=1) + final
    return states, actions, outcomes, costs, x, final, total


def _check_policies(policies: Sequence[Policy]) -> None:
    if len(policies) < 1:
        raise ValueError("need at least one policy step")
    grids = {p.grid for p in policies}
    if len(grids) != 1:
        raise ValueError("all policies must share one grid")


def simulate_trajectory(
    sol: DPSolution | Sequence[Policy],
    problem: ControlProblem,
    x0: float,
    seed: int,
    index: int = 0,
) -> TrajectoryRecord:
    """Sample one closed-loop run. ``index`` selects the trajectory stream."""
    policies = sol.policies if isinstance(sol, DPSolution) else list(sol)
    _check_policies(policies)
    x0 = check_param(x0)
    draws = trajectory_rng(seed, index).random(len(policies))[None, :]
    states, actions, outcomes, costs, xN, final, total = _run_batch(policies, problem, x0, draws)
    steps = tuple(
        TrajectoryStep(i, float(states[0, i]), float(actions[0, i]), int(outcomes[0, i]), float(costs[0, i]))
        for i in range(len(policies))
    )
    return TrajectoryRecord(steps, float(xN[0]), float(final[0]), float(total[0]))


def rollout_costs(
    policies: Sequence[Policy],
    problem: ControlProblem,
    x0: float,
    n: int,
    seed: int,
    workers: int = 1,
) -> np.ndarray:
    """Total cost of trajectories ``0..n-1``, in index order.

    Work is cut into fixed-size chunks, so the result is identical for any
    ``workers`` count.
    """
    _check_policies(policies)
    if n < 1:
        raise ValueError("need at least one trajectory")
    x0 = check_param(x0)
    N = len(policies)
    bounds = [(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]

    def run(bound):
        start, stop = bound
        return _run_batch(policies, problem, x0, _uniforms(seed, start, stop, N))[-1]

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    return np.concatenate(parts)


def _summarize(totals: np.ndarray, seed: int) -> RolloutEstimate:
    # fsum: exactly rounded, so a deterministic run reports stderr 0
    n = totals.size
    mean = math.fsum(totals) / n
    if n == 1:
        return RolloutEstimate(mean, 0.0, 1, seed, stderr_defined=False)
    var = math.fsum((totals - mean) ** 2) / (n - 1)
    return RolloutEstimate(mean, math.sqrt(var / n), n, seed)


def estimate_policy_cost(
    policies: Sequence[Policy],
    problem: ControlProblem,
    x0: float,
    n: int,
    seed: int,
    workers: int = 1,
) -> RolloutEstimate:
    """Mean and standard error of the total cost under fixed per-step policies."""
    policies = list(policies)
    return _summarize(rollout_costs(policies, problem, x0, n, seed, workers), seed)


def estimate_cost(
    sol: DPSolution,
    problem: ControlProblem,
    x0: float,
    n: int,
    seed: int,
    workers: int = 1,
) -> RolloutEstimate:
    return estimate_policy_cost(sol.policies, problem, x0, n, seed, workers)


def trajectory_rows(record: TrajectoryRecord) -> list[tuple]:
    """Dump rows ``(time, state, action, outcome_index, step_cost)``.

    A closing row at ``time = N`` holds the terminal state and terminal cost,
    with empty action and outcome.
    """
    rows = [(s.time, s.state, s.action, s.outcome_index, s.step_cost) for s in record.steps]
    rows.append((len(record.steps), record.terminal_state, None, None, record.terminal_cost))
    return rows
