"""Closed-form approximate Bellman step for quadratic value functions.

For ``J(x) = A x^2 + B x + C`` a filtering outcome contributes
``J(s'(u)) * p(u) = A (a u + b)^2 / (c u + d) + B (a u + b) + C (c u + d)``.
The first term splits into a polynomial quotient plus a fractional remainder
``K / (d + c u)`` with ``K = A (a d - b c)^2 / c^2``. Replacing the remainder
by its quadratic interpolant through u = 0, 1/2, 1 turns the whole one-step
objective into a quadratic in ``u``, which is minimized in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import QuadraticMove
from .measurement import MeasurementSet, MobiusCoeffs, mobius_coeffs

NODES = (0.0, 0.5, 1.0)
CUBIC_MAX = 1.0 / (12.0 * np.sqrt(3.0))  # max of |u (u - 1/2) (u - 1)| on [0, 1]
WIDTH_TOL = 1e-12


@dataclass(frozen=True)
class QuadCoeffs:
    """``A x^2 + B x + C``."""

    A: float
    B: float
    C: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.A, self.B, self.C)):
            raise ValueError(f"non-finite quadratic coefficients {self}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (self.A * x + self.B) * x + self.C

    def __add__(self, other: "QuadCoeffs") -> "QuadCoeffs":
        return QuadCoeffs(self.A + other.A, self.B + other.B, self.C + other.C)

    def scaled(self, k: float) -> "QuadCoeffs":
        return QuadCoeffs(k * self.A, k * self.B, k * self.C)

    @classmethod
    def through_nodes(cls, f) -> "QuadCoeffs":
        """Quadratic interpolant of ``f`` at 0, 1/2, 1."""
        f0, fh, f1 = (float(f(t)) for t in NODES)
        A = 2.0 * (f0 - 2.0 * fh + f1)
        return cls(A, f1 - f0 - A, f0)


ZERO = QuadCoeffs(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class FractionalSplit:
    """``A (a u + b)^2 / (c u + d) == quotient(u) + numerator / (den_d + den_c u)``."""

    quotient: QuadCoeffs
    numerator: float
    den_c: float
    den_d: float

    def remainder(self, u):
        u = np.asarray(u, dtype=float)
        if self.numerator == 0.0:
            return np.zeros_like(u)
        return self.numerator / (self.den_d + self.den_c * u)

    def __call__(self, u):
        return self.quotient(u) + self.remainder(u)


@dataclass(frozen=True)
class PiecewiseQuadratic:
    breakpoints: np.ndarray
    pieces: tuple[QuadCoeffs, ...]

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if len(bp) != len(self.pieces) + 1 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValueError("breakpoints must run from 0 to 1 with one more entry than pieces")
        if np.any(np.diff(bp) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.breakpoints, x, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty_like(x)
        for k, piece in enumerate(self.pieces):
            mask = idx == k
            out[mask] = piece(x[mask])
        return float(out) if out.ndim == 0 else out

    def continuity_gap(self) -> float:
        gaps = [
            abs(float(left(t)) - float(right(t)))
            for left, right, t in zip(self.pieces[:-1], self.pieces[1:], self.breakpoints[1:-1])
        ]
        return max(gaps, default=0.0)


@dataclass(frozen=True)
class ApproxReport:
    """Interpolation error bounds, one entry per filtering operator."""

    operators: tuple[str, ...]
    endpoint_bounds: tuple[float, ...]
    conservative_bounds: tuple[float, ...]
    nodes: tuple[float, ...] = NODES

    @property
    def total_bound(self) -> float:
        return float(sum(self.conservative_bounds))

    @property
    def total_endpoint_bound(self) -> float:
        return float(sum(self.endpoint_bounds))


def _check_denominator(m: MobiusCoeffs) -> None:
    lo, hi = m.d, m.d + m.c
    if lo * hi <= 0.0:
        raise ValueError(f"denominator {m.d} + {m.c} u vanishes on [0, 1]")


def fractional_term(A: float, m: MobiusCoeffs) -> FractionalSplit:
    _check_denominator(m)
    a, b, c, d = m.a, m.b, m.c, m.d
    if c == 0.0:
        # (a u + b)^2 / d is already a polynomial
        return FractionalSplit(QuadCoeffs(A * a * a / d, 2.0 * A * a * b / d, A * b * b / d), 0.0, c, d)
    quotient = QuadCoeffs(0.0, A * a * a / c, A * (2.0 * a * b * c - a * a * d) / (c * c))
    numerator = A * (a * d - b * c) ** 2 / (c * c)
    return FractionalSplit(quotient, numerator, c, d)


def lagrange_quadratic(A: float, m: MobiusCoeffs) -> QuadCoeffs:
    _check_denominator(m)
    a, b, c, d = m.a, m.b, m.c, m.d
    if c == 0.0 or A == 0.0:
        return ZERO
    k = A * (a * d - b * c) ** 2 / (c * c)
    den = d * (c + d) * (c + 2.0 * d)
    return QuadCoeffs(k * 2.0 * c * c / den, -k * c * (3.0 * c + 2.0 * d) / den, k / d)


def error_bound(A: float, m: MobiusCoeffs) -> tuple[float, float]:
    """``(endpoint_bound, conservative_bound)`` on ``max |N - L|`` over [0, 1].

    The third derivative of ``K / (d + c u)`` is largest where the
    denominator is smallest; the endpoint figure evaluates it at u = 1
    only, the conservative figure at the true minimum.
    """
    _check_denominator(m)
    a, b, c, d = m.a, m.b, m.c, m.d
    alpha = abs(A * (a * d - b * c) ** 2 * c)
    if alpha == 0.0:
        return 0.0, 0.0
    endpoint = alpha / (abs(d + c) ** 4) * CUBIC_MAX
    den_min = min(abs(d), abs(d + c))
    return endpoint, alpha / den_min**4 * CUBIC_MAX


def _objective(J: QuadCoeffs, mset: MeasurementSet, mc: QuadraticMove) -> tuple[QuadCoeffs, ApproxReport]:
    """Expected next cost as an (approximate) quadratic in the action ``u``.

    The move cost ``scale (x - u)^2`` is not included.
    """
    total = ZERO
    labels, endpoint, conservative = [], [], []
    for op in mset.ops:
        m = mobius_coeffs(op)
        if m.jump:
            total = total + QuadCoeffs(0.0, m.c, m.d).scaled(float(J(m.destination)))
            continue
        if m.d <= 0.0 or m.d + m.c <= 0.0:
            raise ValueError(f"{op}: outcome probability must be positive on [0, 1]")
        split = fractional_term(J.A, m)
        total = total + split.quotient + lagrange_quadratic(J.A, m)
        total = total + QuadCoeffs(0.0, J.B * m.a, J.B * m.b) + QuadCoeffs(0.0, J.C * m.c, J.C * m.d)
        pb, cb = error_bound(J.A, m)
        labels.append(str(op))
        endpoint.append(pb)
        conservative.append(cb)
    return total, ApproxReport(tuple(labels), tuple(endpoint), tuple(conservative))


def _vertex_line(J, mset, mc):
    """Unclamped minimizer ``u(x) = slope * x + intercept`` plus the pieces' data."""
    if not isinstance(mc, QuadraticMove):
        raise TypeError("the closed-form step needs a quadratic move cost")
    obj, report = _objective(J, mset, mc)
    s = mc.scale
    P = s + obj.A
    if P <= 0.0:
        raise ValueError(f"one-step objective has leading coefficient {P:.6g} <= 0; no interior minimum")
    return s, P, obj.B, obj.C, report


def approx_policy(J: QuadCoeffs, mset: MeasurementSet, mc: QuadraticMove, x):
    """Minimizing action of the approximate step, clamped to [0, 1]."""
    s, P, q, _, _ = _vertex_line(J, mset, mc)
    return np.clip((2.0 * s * np.asarray(x, dtype=float) - q) / (2.0 * P), 0.0, 1.0)


def approx_bellman(
    J: QuadCoeffs, mset: MeasurementSet, mc: QuadraticMove
) -> tuple[PiecewiseQuadratic, ApproxReport]:
    """Approximate backup of a quadratic ``J`` as a piecewise quadratic in x.

    Minimizes ``P u^2 + (q - 2 s x) u + s x^2 + r`` over u in [0, 1]. The
    vertex moves linearly with x, so there are at most three regimes:
    u = 0, interior vertex, u = 1. The reported bound carries over to the
    value function because minimization is non-expansive.
    """
    s, P, q, r, report = _vertex_line(J, mset, mc)
    lower = q / (2.0 * s)  # vertex reaches u = 0
    upper = (2.0 * P + q) / (2.0 * s)  # vertex reaches u = 1
    regimes = [
        (0.0, lower, QuadCoeffs(s, 0.0, r)),
        (lower, upper, QuadCoeffs(s - s * s / P, s * q / P, r - q * q / (4.0 * P))),
        (upper, 1.0, QuadCoeffs(s, -2.0 * s, P + q + r)),
    ]
    bps = [0.0]
    pieces = []
    for lo, hi, piece in regimes:
        lo, hi = max(lo, 0.0), min(hi, 1.0)
        if hi - lo > WIDTH_TOL:
            if pieces:
                bps.append(lo)
            pieces.append(piece)
    bps.append(1.0)
    return PiecewiseQuadratic(np.array(bps), tuple(pieces)), report


@dataclass
class IteratedApprox:
    steps: list[PiecewiseQuadratic] = field(default_factory=list)
    reports: list[ApproxReport] = field(default_factory=list)
    refit_errors: list[float] = field(default_factory=list)

    @property
    def total_bound(self) -> float:
        return float(sum(r.total_bound for r in self.reports) + sum(self.refit_errors))


def approx_bellman_iterated(
    J: QuadCoeffs, mset: MeasurementSet, mc: QuadraticMove, steps: int, scan: int = 10_001
) -> IteratedApprox:
    """Repeat the approximate step ``steps`` times.

    Between steps the piecewise output is replaced by its quadratic
    interpolant at 0, 1/2, 1. The refit deviation, measured on a ``scan``
    point grid, is added to the accumulated bound alongside each step's
    interpolation bound.
    """
    out = IteratedApprox()
    xs = np.linspace(0.0, 1.0, scan)
    current = J
    for k in range(steps):
        pq, report = approx_bellman(current, mset, mc)
        out.steps.append(pq)
        out.reports.append(report)
        if k < steps - 1:
            current = QuadCoeffs.through_nodes(pq)
            out.refit_errors.append(float(np.max(np.abs(current(xs) - pq(xs)))))
    return out
