"""Run configuration: strict JSON schema, validation, problem construction.

Example::

    {
      "model": "affine",
      "measurement": {"operators": [{"kind": "f1", "a": 0.8, "b": 1.0},
                                    {"kind": "j2", "a": 0.0, "b": 0.2}]},
      "steps": 5,
      "grid_n": 101
    }

``measurement`` is either ``{"operators": [...]}`` or
``{"channel": <name>, <param>: <value>, ...}`` with one of the names in
``measurement.CHANNELS``. Every other key is optional; unknown keys are an
error.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .costs import (
    AffineTerminal,
    AngularMove,
    AngularSquaredMove,
    BigValue,
    QuadraticMove,
    ThresholdAngularMove,
    ThresholdTerminal,
)
from .measurement import MeasurementSet, channel, operator
from .rollout import ControlProblem
from .solver import Grid

MODELS = ("affine", "threshold")
MOVE_COSTS = ("quadratic", "threshold_angular", "angular", "angular_squared")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    measurement: dict[str, Any]
    model: str = "affine"
    move_cost: str | None = None
    steps: int = 5
    grid_n: int = 101
    cost_scale: float = 1.0
    big_value: float = 100.0
    target: float = 0.0
    terminal_radius: float = 0.2
    move_radius: float = 0.2
    steady_tol: float = 1e-2
    seed: int = 0
    trajectories: int = 10_000
    x0: float = 0.5
    dump_trajectories: int = 0
    workers: int = 1
    value_coeffs: tuple[float, float, float] = field(default=(0.0, 1.0, 0.0))

    def __post_init__(self):
        _validate(self)

    @property
    def resolved_move_cost(self) -> str:
        if self.move_cost is not None:
            return self.move_cost
        return "quadratic" if self.model == "affine" else "threshold_angular"

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["value_coeffs"] = list(self.value_coeffs)
        return d

    def replace(self, **changes) -> "RunConfig":
        d = self.to_dict()
        d.update(changes)
        return from_dict(d)


_INT_KEYS = ("steps", "grid_n", "seed", "trajectories", "dump_trajectories", "workers")
_FLOAT_KEYS = (
    "cost_scale", "big_value", "target", "terminal_radius", "move_radius", "steady_tol", "x0",
)


def _validate(cfg: RunConfig) -> None:
    def need(ok: bool, key: str, msg: str):
        if not ok:
            raise ConfigError(f"{key}: {msg}")

    need(cfg.model in MODELS, "model", f"expected one of {MODELS}, got {cfg.model!r}")
    need(cfg.move_cost is None or cfg.move_cost in MOVE_COSTS, "move_cost",
         f"expected one of {MOVE_COSTS}, got {cfg.move_cost!r}")
    for key in _INT_KEYS:
        v = getattr(cfg, key)
        need(isinstance(v, int) and not isinstance(v, bool), key, f"expected an integer, got {v!r}")
    for key in _FLOAT_KEYS:
        v = getattr(cfg, key)
        need(isinstance(v, (int, float)) and not isinstance(v, bool), key, f"expected a number, got {v!r}")
    need(cfg.steps >= 1, "steps", "must be >= 1")
    need(cfg.grid_n >= 2, "grid_n", "must be >= 2")
    need(cfg.cost_scale > 0, "cost_scale", "must be > 0")
    need(cfg.big_value >= 100, "big_value", "must be >= 100")
    need(0 <= cfg.target <= 1, "target", "must lie in [0, 1]")
    need(0 <= cfg.x0 <= 1, "x0", "must lie in [0, 1]")
    need(cfg.terminal_radius > 0, "terminal_radius", "must be > 0")
    need(cfg.move_radius > 0, "move_radius", "must be > 0")
    need(cfg.steady_tol >= 0, "steady_tol", "must be >= 0")
    need(cfg.seed >= 0, "seed", "must be >= 0")
    need(cfg.trajectories >= 1, "trajectories", "must be >= 1")
    need(cfg.dump_trajectories >= 0, "dump_trajectories", "must be >= 0")
    need(cfg.workers >= 1, "workers", "must be >= 1")
    vc = cfg.value_coeffs
    need(isinstance(vc, (list, tuple)) and len(vc) == 3, "value_coeffs", "expected [A, B, C]")
    object.__setattr__(cfg, "value_coeffs", tuple(float(v) for v in vc))
    try:
        build_measurements(cfg.measurement)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"measurement: {exc}") from None


def build_measurements(spec: dict[str, Any]) -> MeasurementSet:
    if not isinstance(spec, dict):
        raise ValueError("expected an object with 'operators' or 'channel'")
    if "operators" in spec:
        if set(spec) != {"operators"}:
            raise ValueError(f"unexpected keys {sorted(set(spec) - {'operators'})} next to 'operators'")
        ops = []
        for rec in spec["operators"]:
            if set(rec) != {"kind", "a", "b"}:
                raise ValueError(f"operator record {rec} must have exactly kind, a, b")
            ops.append(operator(rec["kind"], float(rec["a"]), float(rec["b"])))
        return MeasurementSet(tuple(ops))
    if "channel" in spec:
        params = {k: v for k, v in spec.items() if k != "channel"}
        return channel(spec["channel"], **params)
    raise ValueError("expected 'operators' or 'channel'")


def from_dict(data: dict[str, Any]) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown configuration key")
    if "measurement" not in data:
        raise ConfigError("measurement: required key missing")
    return RunConfig(**data)


def load_config(path: str | Path) -> RunConfig:
    """Read a config file, or the config echoed inside a run summary."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict) and "config" in data and "measurement" not in data:
        data = data["config"]
    return from_dict(data)


def parse_override(text: str) -> tuple[str, Any]:
    """``key=value`` with a JSON value; bare words are taken as strings."""
    key, sep, raw = text.partition("=")
    if not sep:
        raise ConfigError(f"{text}: override must look like key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def build_problem(cfg: RunConfig) -> tuple[ControlProblem, Grid]:
    big = BigValue(float(cfg.big_value))
    if cfg.model == "affine":
        tc = AffineTerminal(cfg.target)
    else:
        tc = ThresholdTerminal(cfg.target, cfg.terminal_radius, big.value)
    kind = cfg.resolved_move_cost
    if kind == "quadratic":
        mc = QuadraticMove(cfg.cost_scale)
    elif kind == "threshold_angular":
        mc = ThresholdAngularMove(cfg.move_radius, big.value)
    elif kind == "angular":
        mc = AngularMove()
    else:
        mc = AngularSquaredMove()
    return ControlProblem(tc, mc, build_measurements(cfg.measurement), big), Grid(cfg.grid_n)
