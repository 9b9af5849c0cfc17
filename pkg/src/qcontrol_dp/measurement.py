"""Measurement operators that preserve the one-parameter qubit family.

Four real, nonnegative 2x2 operator shapes keep the family closed under
``|psi> -> K|psi> / ||K|psi>||``:

====  =======================  ==========================  ================
kind  matrix                   post-state s'               Pr(K | s)
====  =======================  ==========================  ================
f1    [[sqrt a, 0], [0, sqrt b]]  b s / ((b-a) s + a)       (b-a) s + a
f2    [[0, sqrt b], [sqrt a, 0]]  a (1-s) / ((b-a) s + a)   (b-a) s + a
j1    [[0, sqrt a], [0, sqrt b]]  b / (a+b)                 (a+b) s
j2    [[sqrt a, 0], [sqrt b, 0]]  b / (a+b)                 (a+b) (1-s)
====  =======================  ==========================  ================

``f*`` are filtering (rank 2, Bayesian update) operators and ``j*`` are
jumps (rank 1, collapse to a fixed state).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .statespace import check_param

KINDS = ("f1", "f2", "j1", "j2")
FILTERING = ("f1", "f2")
JUMP = ("j1", "j2")

COMPLETENESS_TOL = 1e-9


@dataclass(frozen=True)
class MobiusCoeffs:
    """Fractional-linear form ``s' = (a u + b) / (c u + d)``, ``Pr = c u + d``.

    For jumps the same four numbers are used with ``a/c = b/d`` equal to the
    fixed destination, so the probability line stays exact:
    j1 -> (b, 0, a+b, 0), j2 -> (-b, b, -(a+b), a+b).
    """

    a: float
    b: float
    c: float
    d: float
    jump: bool = False

    def probability(self, u):
        return self.c * np.asarray(u, dtype=float) + self.d

    def image(self, u):
        u = np.asarray(u, dtype=float)
        if self.jump:
            return np.full_like(u, self.destination)
        return (self.a * u + self.b) / (self.c * u + self.d)

    @property
    def destination(self) -> float:
        """Fixed post-state of a jump operator."""
        if not self.jump:
            raise ValueError("only jump operators have a fixed destination")
        return self.a / self.c


@dataclass(frozen=True)
class MeasurementOperator:
    """One operator of the table above, parameterized by ``(a, b)`` in [0, 1]."""

    kind: str
    a: float
    b: float

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}; expected one of {KINDS}")
        for name in ("a", "b"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0.0 or v > 1.0:
                raise ValueError(f"{kind}: parameter {name}={v} outside [0, 1]")
        if self.a == 0.0 and self.b == 0.0:
            raise ValueError(f"{kind}(0, 0) is the zero operator")
        if kind in FILTERING and self.a * self.b == 0.0:
            raise ValueError(f"filtering operator {kind} requires a*b != 0, got a={self.a}, b={self.b}")

    @property
    def is_filtering(self) -> bool:
        return self.kind in FILTERING

    def matrix(self) -> np.ndarray:
        ra, rb = np.sqrt(self.a), np.sqrt(self.b)
        if self.kind == "f1":
            return np.array([[ra, 0.0], [0.0, rb]])
        if self.kind == "f2":
            return np.array([[0.0, rb], [ra, 0.0]])
        if self.kind == "j1":
            return np.array([[0.0, ra], [0.0, rb]])
        return np.array([[ra, 0.0], [rb, 0.0]])

    def probability(self, s):
        s = np.asarray(s, dtype=float)
        a, b = self.a, self.b
        if self.kind in FILTERING:
            return (b - a) * s + a
        if self.kind == "j1":
            return (a + b) * s
        return (a + b) * (1.0 - s)

    def image(self, s):
        """Post-measurement state, NaN wherever the outcome has probability 0."""
        s = np.asarray(s, dtype=float)
        a, b = self.a, self.b
        p = self.probability(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "f1":
                out = b * s / p
            elif self.kind == "f2":
                out = a * (1.0 - s) / p
            else:
                out = np.full_like(s, b / (a + b))
        out = np.where(p > 0.0, np.clip(out, 0.0, 1.0), np.nan)
        return out

    def __str__(self) -> str:
        return f"{self.kind}({self.a:g}, {self.b:g})"


def operator(kind: str, a: float, b: float) -> MeasurementOperator:
    """Build an operator, rewriting rank-1 filtering shapes as the equal jump.

    ``f1(a, 0)`` is the matrix of ``j2(a, 0)`` and so on; channel formulas hit
    these at the edges of their parameter range.
    """
    kind = kind.lower()
    if kind in FILTERING and a * b == 0.0 and a + b > 0.0:
        if kind == "f1":
            kind, a, b = ("j2", a, 0.0) if b == 0.0 else ("j1", 0.0, b)
        else:
            kind, a, b = ("j2", 0.0, a) if b == 0.0 else ("j1", b, 0.0)
    return MeasurementOperator(kind, a, b)


def apply(op: MeasurementOperator, s):
    """Return ``(s', p)`` for measuring ``op`` on state ``s``.

    When ``p == 0`` the post-state is NaN and must not be used.
    """
    s = check_param(s)
    p = op.probability(s)
    s_new = op.image(s)
    if np.ndim(s_new) == 0:
        return float(s_new), float(p)
    return s_new, p


def mobius_coeffs(op: MeasurementOperator) -> MobiusCoeffs:
    a, b = op.a, op.b
    if op.kind == "f1":
        return MobiusCoeffs(b, 0.0, b - a, a)
    if op.kind == "f2":
        return MobiusCoeffs(-a, a, b - a, a)
    if op.kind == "j1":
        return MobiusCoeffs(b, 0.0, a + b, 0.0, jump=True)
    return MobiusCoeffs(-b, b, -(a + b), a + b, jump=True)


def check_completeness(ops: Sequence[MeasurementOperator]) -> float:
    """Max-entry deviation of sum_j K_j^T K_j from the identity."""
    if len(ops) == 0:
        raise ValueError("empty operator list")
    total = np.zeros((2, 2))
    for op in ops:
        k = op.matrix()
        total += k.T @ k
    return float(np.max(np.abs(total - np.eye(2))))


@dataclass(frozen=True)
class MeasurementSet:
    """Complete, ordered set of operators. Outcome index = position in ``ops``."""

    ops: tuple[MeasurementOperator, ...]
    completeness_defect: float = field(init=False)
    name: str = ""

    def __post_init__(self):
        ops = tuple(self.ops)
        object.__setattr__(self, "ops", ops)
        if not ops:
            raise ValueError("a measurement set needs at least one operator")
        if not any(op.is_filtering for op in ops):
            raise ValueError("a measurement set needs at least one filtering operator")
        defect = check_completeness(ops)
        if defect > COMPLETENESS_TOL:
            raise ValueError(
                f"operators {[str(o) for o in ops]} violate completeness (defect {defect:.3g})"
            )
        object.__setattr__(self, "completeness_defect", defect)

    def __len__(self) -> int:
        return len(self.ops)

    def transitions(self, u):
        """Vectorized outcome table for actions ``u``.

        Returns ``(states, probs)`` of shape ``(len(ops),) + u.shape``;
        states are NaN where the probability is zero.
        """
        u = np.asarray(u, dtype=float)
        states = np.stack([op.image(u) for op in self.ops])
        probs = np.stack([np.maximum(op.probability(u), 0.0) for op in self.ops])
        return states, probs

    def describe(self) -> str:
        return self.name or "{" + ", ".join(str(o) for o in self.ops) + "}"


def outcome_distribution(mset: MeasurementSet, u) -> list[tuple[int, float, float]]:
    """``[(outcome index, s', p)]`` for every outcome with ``p > 0`` at ``u``."""
    u = check_param(u)
    out = []
    for j, op in enumerate(mset.ops):
        p = float(op.probability(u))
        if p > 0.0:
            out.append((j, float(op.image(u)), p))
    return out


def _build(name: str, specs) -> MeasurementSet:
    ops = [operator(k, a, b) for k, a, b in specs if a + b > 0.0]
    if not ops:
        raise ValueError(f"{name}: every operator vanished")
    return MeasurementSet(tuple(ops), name=name)


def _check_unit(**params):
    for k, v in params.items():
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"channel parameter {k}={v} outside [0, 1]")


def amplitude_damping(gamma: float) -> MeasurementSet:
    _check_unit(gamma=gamma)
    return _build(
        f"amplitude_damping({gamma:g})",
        [("f1", 1.0, 1.0 - gamma), ("j1", gamma, 0.0)],
    )


def phase_damping(gamma: float) -> MeasurementSet:
    _check_unit(gamma=gamma)
    return _build(
        f"phase_damping({gamma:g})",
        [("f1", 1.0, 1.0 - gamma), ("j1", 0.0, gamma)],
    )


def generalized_amplitude_damping(p: float, gamma: float) -> MeasurementSet:
    _check_unit(p=p, gamma=gamma)
    q = 1.0 - p
    return _build(
        f"generalized_amplitude_damping({p:g}, {gamma:g})",
        [
            ("f1", p, p * (1.0 - gamma)),
            ("f1", q * (1.0 - gamma), q),
            ("j1", p * gamma, 0.0),
            ("j2", 0.0, q * gamma),
        ],
    )


def bit_flip(p: float) -> MeasurementSet:
    _check_unit(p=p)
    return _build(f"bit_flip({p:g})", [("f1", p, p), ("f2", 1.0 - p, 1.0 - p)])


def upward_decay(a: float) -> MeasurementSet:
    """``{f1(a, 1), j2(0, 1-a)}``: drift and jumps towards |1>, away from |0>.

    Smaller ``a`` means a less stable |0>.
    """
    _check_unit(a=a)
    return _build(f"upward_decay({a:g})", [("f1", a, 1.0), ("j2", 0.0, 1.0 - a)])


CHANNELS = {
    "amplitude_damping": (amplitude_damping, ("gamma",)),
    "phase_damping": (phase_damping, ("gamma",)),
    "generalized_amplitude_damping": (generalized_amplitude_damping, ("p", "gamma")),
    "bit_flip": (bit_flip, ("p",)),
    "upward_decay": (upward_decay, ("a",)),
}


def channel(name: str, **params: float) -> MeasurementSet:
    """Build a named channel, e.g. ``channel("amplitude_damping", gamma=0.36)``."""
    try:
        fn, keys = CHANNELS[name]
    except KeyError:
        raise ValueError(f"unknown channel {name!r}; known: {sorted(CHANNELS)}") from None
    if set(params) != set(keys):
        raise ValueError(f"channel {name} takes parameters {keys}, got {sorted(params)}")
    return fn(*(float(params[k]) for k in keys))
