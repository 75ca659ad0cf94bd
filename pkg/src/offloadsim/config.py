"""Scenario configuration: a flat ``key = value`` text format and the
typed record it parses into.

All keys have defaults, so an empty file is a valid baseline scenario:
a 4x4 location grid with sticky random-walk mobility, half the cells
Wi-Fi covered, LTE-class cellular against congested Wi-Fi, usage-priced
cellular at 6 $/Gbyte, ten-second slots, a 10 Mbit size grid, and a
quadratic deadline penalty.

Internally the simulator works in megabits: file sizes convert at
8 Mbit per Mbyte, prices at 8000 Mbit per Gbyte, and rates at
``Mbps * slot seconds`` per slot.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .errors import ConfigError
from .model import PenaltyFn, QuadraticPenalty, StepPenalty

MBIT_PER_MBYTE = 8.0
MBIT_PER_GBYTE = 8000.0

SWEEP_AXES = ("deadline", "mu_wifi", "file_size", "p_stay")

DEFAULT_SWEEP_VALUES = {
    "deadline": (1.0, 2.0, 3.0, 4.0, 5.0),
    "mu_wifi": (20.0, 60.0, 100.0, 140.0, 180.0),
    "file_size": (125.0, 250.0, 500.0, 750.0),
    "p_stay": (0.1, 0.3, 0.5, 0.7, 0.9),
}


@dataclass(frozen=True)
class ScenarioConfig:
    grid_rows: int = 4
    grid_cols: int = 4
    p_stay: float = 0.6
    wifi_prob: float = 0.5
    mu_cellular_mbps: float = 90.0
    mu_wifi_mbps: float = 20.0
    rate_std_mbps: float = 5.0
    price_per_gbyte: float = 6.0
    file_mbytes: float = 750.0
    deadline_minutes: float = 5.0
    slot_seconds: float = 10.0
    grid_step_mbit: float = 10.0
    penalty: str = "quadratic"
    penalty_quadratic_coeff: float = 1.0
    penalty_step_amount: float = 100000.0
    wiffler_theta: float = 1.0
    wiffler_window: int = 4
    runs: int = 1000
    seed: int = 12345
    sweep_axis: str = "deadline"
    sweep_values: tuple = ()

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise ConfigError("grid_rows and grid_cols must be >= 1")
        for key in ("p_stay", "wifi_prob"):
            v = getattr(self, key)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{key} must be in [0, 1], got {v!r}")
        for key in (
            "mu_cellular_mbps",
            "mu_wifi_mbps",
            "rate_std_mbps",
            "price_per_gbyte",
            "file_mbytes",
            "penalty_quadratic_coeff",
            "penalty_step_amount",
        ):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be >= 0")
        for key in ("deadline_minutes", "slot_seconds", "grid_step_mbit", "wiffler_theta"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be > 0")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.wiffler_window < 1:
            raise ConfigError("wiffler_window must be >= 1")
        if self.penalty not in ("quadratic", "step"):
            raise ConfigError(f"penalty must be 'quadratic' or 'step', got {self.penalty!r}")
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"sweep_axis must be one of {SWEEP_AXES}, got {self.sweep_axis!r}")
        slots = 60.0 * self.deadline_minutes / self.slot_seconds
        if abs(slots - round(slots)) > 1e-9 or round(slots) < 1:
            raise ConfigError(
                f"deadline_minutes={self.deadline_minutes!r} and "
                f"slot_seconds={self.slot_seconds!r} give a non-integral "
                f"slot count {slots!r}"
            )

    @property
    def horizon(self) -> int:
        return int(round(60.0 * self.deadline_minutes / self.slot_seconds))

    @property
    def num_locations(self) -> int:
        return self.grid_rows * self.grid_cols

    @property
    def file_mbit(self) -> float:
        return self.file_mbytes * MBIT_PER_MBYTE

    @property
    def price_per_mbit(self) -> float:
        return self.price_per_gbyte / MBIT_PER_GBYTE

    def rate_mbit_per_slot(self, mbps: float) -> float:
        return mbps * self.slot_seconds

    def make_penalty(self) -> PenaltyFn:
        if self.penalty == "quadratic":
            return QuadraticPenalty(self.penalty_quadratic_coeff)
        return StepPenalty(self.penalty_step_amount)

    def with_sweep_value(self, axis: str, value: float) -> "ScenarioConfig":
        if axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {axis!r}")
        fields = {
            "deadline": "deadline_minutes",
            "mu_wifi": "mu_wifi_mbps",
            "file_size": "file_mbytes",
            "p_stay": "p_stay",
        }
        return dataclasses.replace(self, **{fields[axis]: value})

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["sweep_values"] = list(self.sweep_values)
        return d


_INT_KEYS = {"grid_rows", "grid_cols", "wiffler_window", "runs", "seed"}
_FLOAT_KEYS = {
    "p_stay",
    "wifi_prob",
    "mu_cellular_mbps",
    "mu_wifi_mbps",
    "rate_std_mbps",
    "price_per_gbyte",
    "file_mbytes",
    "deadline_minutes",
    "slot_seconds",
    "grid_step_mbit",
    "penalty_quadratic_coeff",
    "penalty_step_amount",
    "wiffler_theta",
}
_STR_KEYS = {"penalty", "sweep_axis"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _STR_KEYS:
            return raw
        if key == "sweep_values":
            return tuple(float(v) for v in raw.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for key '{key}': {raw!r}") from exc
    raise ConfigError(f"unknown configuration key '{key}'")


def parse_config_text(text: str) -> ScenarioConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        values[key] = _parse_value(key, raw)
    try:
        return ScenarioConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(path) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    return parse_config_text(text)


def serialize_config(cfg: ScenarioConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if f.name == "sweep_values":
            if not value:
                continue
            rendered = ",".join(repr(v) for v in value)
        else:
            rendered = value if isinstance(value, str) else repr(value)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"


def config_to_json(cfg: ScenarioConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
