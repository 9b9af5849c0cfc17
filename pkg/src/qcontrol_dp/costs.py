"""Terminal and per-step (move) costs.

Inadmissible moves are never removed from the action set; they are priced at
a large finite penalty instead, so every action in [0, 1] stays available.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statespace import angular_distance, check_param

DEFAULT_BIG = 100.0


@dataclass(frozen=True)
class BigValue:
    """Finite stand-in for an infinite cost."""

    value: float = DEFAULT_BIG

    def __post_init__(self):
        if not self.value >= DEFAULT_BIG:
            raise ValueError(f"big value must be >= {DEFAULT_BIG}, got {self.value}")


@dataclass(frozen=True)
class AffineTerminal:
    """``|x - target|``; with target 0 this is the trace distance to |0>."""

    target: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "target", check_param(self.target))


@dataclass(frozen=True)
class ThresholdTerminal:
    """``|x - target|`` inside ``radius`` (inclusive), ``penalty`` outside."""

    target: float = 0.0
    radius: float = 0.2
    penalty: float = DEFAULT_BIG

    def __post_init__(self):
        object.__setattr__(self, "target", check_param(self.target))
        if self.radius <= 0 or self.penalty <= 0:
            raise ValueError("threshold terminal cost needs radius > 0 and penalty > 0")


TerminalCost = AffineTerminal | ThresholdTerminal


@dataclass(frozen=True)
class QuadraticMove:
    """``scale * (s - u)^2``. Scale 4 is the Taylor expansion of d_theta^2 about 1/2."""

    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"quadratic move cost needs scale > 0, got {self.scale}")


@dataclass(frozen=True)
class ThresholdAngularMove:
    """Free if the Bloch angle is strictly below ``radius``, else ``penalty``."""

    radius: float = 0.2
    penalty: float = DEFAULT_BIG

    def __post_init__(self):
        if self.radius <= 0 or self.penalty <= 0:
            raise ValueError("threshold move cost needs radius > 0 and penalty > 0")


@dataclass(frozen=True)
class AngularMove:
    pass


@dataclass(frozen=True)
class AngularSquaredMove:
    pass


MoveCost = QuadraticMove | ThresholdAngularMove | AngularMove | AngularSquaredMove


def terminal(tc: TerminalCost, x):
    x = check_param(x)
    dist = np.abs(np.asarray(x) - tc.target)
    if isinstance(tc, AffineTerminal):
        out = dist
    elif isinstance(tc, ThresholdTerminal):
        out = np.where(dist <= tc.radius, dist, tc.penalty)
    else:
        raise TypeError(f"not a terminal cost: {tc!r}")
    return float(out) if np.ndim(out) == 0 else out


def move(mc: MoveCost, s, u):
    """Cost of steering state ``s`` to action state ``u``. Broadcasts."""
    s = np.asarray(check_param(s))
    u = np.asarray(check_param(u))
    if isinstance(mc, QuadraticMove):
        out = mc.scale * (s - u) ** 2
    elif isinstance(mc, ThresholdAngularMove):
        out = np.where(angular_distance(s, u) < mc.radius, 0.0, mc.penalty)
    elif isinstance(mc, AngularMove):
        out = np.asarray(angular_distance(s, u))
    elif isinstance(mc, AngularSquaredMove):
        out = np.asarray(angular_distance(s, u)) ** 2
    else:
        raise TypeError(f"not a move cost: {mc!r}")
    # exact zero on the diagonal; arccos roundoff can leave ~1e-8 there
    out = np.where(s == u, 0.0, out)
    return float(out) if np.ndim(out) == 0 else out
