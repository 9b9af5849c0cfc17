"""One-parameter qubit states sqrt(1-x)|0> + sqrt(x)|1>, x in [0, 1].

The relative phase is quotiented out, so a state is identified with its
population parameter ``x``. Every function here accepts plain floats or
numpy arrays and broadcasts.
"""

from __future__ import annotations

import numpy as np

CLAMP_TOL = 1e-12


class StateParam(float):
    """Validated state parameter.

    Values within ``CLAMP_TOL`` outside [0, 1] are clamped, anything further
    out raises ``ValueError``.
    """

    def __new__(cls, x: float) -> "StateParam":
        return super().__new__(cls, check_param(float(x)))

    def __repr__(self) -> str:
        return f"StateParam({float(self)!r})"


def check_param(x, tol: float = CLAMP_TOL):
    """Clamp ``x`` into [0, 1], rejecting values further than ``tol`` outside."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"state parameter must be finite, got {x!r}")
    if np.any(arr < -tol) or np.any(arr > 1.0 + tol):
        raise ValueError(f"state parameter outside [0, 1]: {x!r}")
    out = np.clip(arr, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def amplitudes(x):
    """Return the (|0>, |1>) amplitudes ``(sqrt(1-x), sqrt(x))``."""
    x = check_param(x)
    return np.sqrt(1.0 - x), np.sqrt(x)


def overlap(x, y):
    """Squared fidelity |<psi_x|psi_y>|^2."""
    x = check_param(x)
    y = check_param(y)
    f = np.sqrt((1.0 - x) * (1.0 - y)) + np.sqrt(x * y)
    return np.minimum(f * f, 1.0)


def trace_distance(x, y):
    """Pure-state trace distance ``1 - overlap``; reduces to ``x`` when y = 0."""
    return 1.0 - overlap(x, y)


def angular_distance(x, u):
    """Bloch-sphere angle between the states, in radians.

    ``cos(d) = 2*overlap - 1``. The radicand is x(1-x)u(1-u), which is the
    symmetric form consistent with that identity.
    """
    x = check_param(x)
    u = check_param(u)
    arg = 1.0 - 2.0 * u - 2.0 * x + 4.0 * x * u + 4.0 * np.sqrt(x * (1.0 - x) * u * (1.0 - u))
    arg = np.asarray(arg, dtype=float)
    if np.any(arg > 1.0 + CLAMP_TOL) or np.any(arg < -1.0 - CLAMP_TOL):
        raise ValueError("arccos argument out of range; inputs are inconsistent")
    d = np.arccos(np.clip(arg, -1.0, 1.0))
    return float(d) if d.ndim == 0 else d
