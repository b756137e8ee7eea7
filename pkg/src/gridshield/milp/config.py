"""Planning/solver configuration shared across the pipeline."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class PlanningConfig:
    """Knobs of the restoration planning model.

    ``dt_minutes`` is the period length, ``horizon_periods`` the number of
    periods.  ``big_m`` of None means the voltage-decoupling constant is
    derived from the instance (tightest provably valid value).  ``epsilon``
    pins the arrival-period rounding window; with the default 0.5 the
    arrival period is forced to the exact travel-step count.  Costs are in
    dollars; ``cost_per_mile`` applies to underground construction and
    ``cost_rcs`` to each of the two remote-controlled switches per line.
    ``max_underground`` of None leaves the line-count cap out of the model.
    """

    dt_minutes: float = 5.0
    horizon_periods: int = 24
    big_m: float | None = None
    epsilon: float = 0.5
    budget: float = 1_000_000.0
    cost_per_mile: float = 1_000_000.0
    cost_rcs: float = 15_000.0
    max_underground: int | None = None
    optimality_gap: float = 0.01
    substation_available: bool = True
    time_limit_seconds: float | None = None

    def __post_init__(self):
        if self.dt_minutes <= 0:
            raise ValueError("dt_minutes must be > 0")
        if self.horizon_periods < 1:
            raise ValueError("horizon_periods must be >= 1")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie strictly between 0 and 1")
        for name in ("budget", "cost_per_mile", "cost_rcs"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.optimality_gap < 0:
            raise ValueError("optimality_gap must be >= 0")

    @property
    def dt_hours(self) -> float:
        return self.dt_minutes / 60.0

    def to_dict(self) -> dict:
        return asdict(self)

    def override(self, **kwargs) -> "PlanningConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs)


def parse_config(text) -> PlanningConfig:
    """Load a config document (JSON object mirroring the field names)."""
    doc = json.loads(text) if isinstance(text, (str, bytes)) else text
    if not isinstance(doc, dict):
        raise ValueError("config document must be a JSON object")
    known = set(PlanningConfig.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    return PlanningConfig(**doc)


def load_config(path) -> PlanningConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
