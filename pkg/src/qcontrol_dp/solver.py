"""Backward dynamic programming on a uniform grid over [0, 1].

The action set is the state grid itself. Off-grid post-measurement states
are evaluated by piecewise-linear interpolation of the next value function,
which keeps the backup monotone and non-expansive in the sup norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .costs import BigValue, MoveCost, TerminalCost, move, terminal
from .measurement import MeasurementSet
from .statespace import check_param

DEFAULT_GRID_N = 101
CAP_FACTOR = 10.0


@dataclass(frozen=True)
class Grid:
    n: int = DEFAULT_GRID_N

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"grid needs an integer n >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def spacing(self) -> float:
        return 1.0 / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return _nodes(self.n)

    def nearest(self, x):
        """Index of the grid node closest to ``x`` (ties go to the lower node)."""
        x = np.asarray(x, dtype=float)
        idx = np.ceil(x * (self.n - 1) - 0.5).astype(int)
        return np.clip(idx, 0, self.n - 1)


@lru_cache(maxsize=16)
def _nodes(n: int) -> np.ndarray:
    nodes = np.arange(n, dtype=float) / (n - 1)
    nodes.flags.writeable = False
    return nodes


@dataclass(frozen=True)
class ValueFn:
    grid: Grid
    values: np.ndarray
    capped: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ValueError(f"value array has shape {values.shape}, grid has {self.grid.n} nodes")
        if not np.all(np.isfinite(values)):
            raise ValueError("value function must be finite")
        object.__setattr__(self, "values", values)

    def __call__(self, x):
        return interpolate(self, x)


@dataclass(frozen=True)
class Policy:
    grid: Grid
    actions: np.ndarray

    def __post_init__(self):
        actions = np.asarray(self.actions, dtype=float)
        if actions.shape != (self.grid.n,):
            raise ValueError(f"policy has shape {actions.shape}, grid has {self.grid.n} nodes")
        object.__setattr__(self, "actions", check_param(actions))

    def action(self, x):
        """Action at (possibly off-grid) state ``x``, read from the nearest node."""
        return self.actions[self.grid.nearest(x)]

    @classmethod
    def stay(cls, grid: Grid) -> "Policy":
        return cls(grid, grid.nodes.copy())

    @classmethod
    def constant(cls, grid: Grid, u: float) -> "Policy":
        return cls(grid, np.full(grid.n, float(u)))


@dataclass(frozen=True)
class DPSolution:
    """Value functions ``values[0..N]`` and policies ``policies[0..N-1]``.

    ``sup_norm_diffs[i]`` is ``max |J_i - J_{i+1}|``.
    """

    grid: Grid
    values: list[ValueFn]
    policies: list[Policy]
    sup_norm_diffs: np.ndarray = field(repr=False)

    @property
    def horizon(self) -> int:
        return len(self.policies)

    @property
    def capped(self) -> bool:
        return any(v.capped for v in self.values)


def interpolate(v: ValueFn, x):
    x = check_param(x)
    out = np.interp(x, v.grid.nodes, v.values)
    return float(out) if np.ndim(out) == 0 else out


@lru_cache(maxsize=8)
def _move_matrix(mc: MoveCost, n: int) -> np.ndarray:
    nodes = _nodes(n)
    m = np.asarray(move(mc, nodes[:, None], nodes[None, :]), dtype=float)
    m.flags.writeable = False
    return m


def expected_next(J_next: ValueFn, mset: MeasurementSet, u) -> np.ndarray:
    """``sum_alpha p(alpha|u) J_next(s'_alpha(u))`` for each action ``u``."""
    states, probs = mset.transitions(u)
    live = probs > 0.0
    vals = np.interp(np.where(live, states, 0.0), J_next.grid.nodes, J_next.values)
    return np.sum(np.where(live, probs * vals, 0.0), axis=0)


def bellman_backup(
    J_next: ValueFn,
    mset: MeasurementSet,
    mc: MoveCost,
    big: BigValue = BigValue(),
) -> tuple[ValueFn, Policy]:
    """One backward step, minimizing over every grid node as the action.

    Ties go to the smallest action. Values above ``10 * big`` are capped and
    the result is flagged ``capped``.
    """
    if mset is None or len(mset) == 0:
        raise ValueError("empty measurement set")
    grid = J_next.grid
    nodes = grid.nodes
    q = _move_matrix(mc, grid.n) + expected_next(J_next, mset, nodes)[None, :]
    best = np.argmin(q, axis=1)
    values = q[np.arange(grid.n), best]
    cap = CAP_FACTOR * big.value
    capped = bool(np.any(values > cap))
    values = np.minimum(values, cap)
    return ValueFn(grid, values, capped), Policy(grid, nodes[best])


def solve_finite_horizon(
    tc: TerminalCost,
    mc: MoveCost,
    mset: MeasurementSet,
    grid: Grid,
    N: int,
    big: BigValue = BigValue(),
) -> DPSolution:
    if int(N) != N or N < 1:
        raise ValueError(f"horizon must be an integer >= 1, got {N}")
    N = int(N)
    values: list[ValueFn] = [None] * (N + 1)  # type: ignore[list-item]
    policies: list[Policy] = [None] * N  # type: ignore[list-item]
    diffs = np.zeros(N)
    values[N] = ValueFn(grid, terminal(tc, grid.nodes))
    for i in range(N - 1, -1, -1):
        values[i], policies[i] = bellman_backup(values[i + 1], mset, mc, big)
        diffs[i] = np.max(np.abs(values[i].values - values[i + 1].values))
    return DPSolution(grid, values, policies, diffs)


def detect_steady_state(sol: DPSolution, tol: float) -> int | None:
    """Largest ``i`` with every backward difference at times ``0..i`` below ``tol``.

    Reading backwards from the horizon, this is the step at which the value
    functions settle under ``tol`` and stay there all the way to time 0.
    """
    below = sol.sup_norm_diffs < tol
    if not below[0]:
        return None
    bad = np.flatnonzero(~below)
    return sol.horizon - 1 if bad.size == 0 else int(bad[0]) - 1
