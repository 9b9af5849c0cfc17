"""Finite-horizon dynamic programming for single-qubit state preparation."""

from .analytic import (
    ApproxReport,
    PiecewiseQuadratic,
    QuadCoeffs,
    approx_bellman,
    approx_bellman_iterated,
    error_bound,
    fractional_term,
    lagrange_quadratic,
)
from .costs import (
    AffineTerminal,
    AngularMove,
    AngularSquaredMove,
    BigValue,
    QuadraticMove,
    ThresholdAngularMove,
    ThresholdTerminal,
    move,
    terminal,
)
from .measurement import (
    MeasurementOperator,
    MeasurementSet,
    MobiusCoeffs,
    amplitude_damping,
    apply,
    bit_flip,
    channel,
    check_completeness,
    generalized_amplitude_damping,
    mobius_coeffs,
    outcome_distribution,
    phase_damping,
    upward_decay,
)
from .rollout import (
    ControlProblem,
    RolloutEstimate,
    TrajectoryRecord,
    estimate_cost,
    estimate_policy_cost,
    simulate_trajectory,
)
from .solver import (
    DPSolution,
    Grid,
    Policy,
    ValueFn,
    bellman_backup,
    detect_steady_state,
    interpolate,
    solve_finite_horizon,
)
from .statespace import StateParam, amplitudes, angular_distance, overlap, trace_distance

__version__ = "0.1.0"
