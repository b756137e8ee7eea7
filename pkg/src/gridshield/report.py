"""Post-processing of solved models into restoration metrics.

Turns raw variable values into the quantities operators care about:
served-load trajectories, per-unit mobile-generator outputs and
utilization rates, served-energy totals, and coordinated-vs-baseline
comparisons.  All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Network
from .milp.variables import CONNECTED, CURTAIL_P, MG_P
from .solver.backend import Solution


@dataclass(frozen=True)
class RestorationTrajectory:
    """Per-period service levels for one scenario (or a probability mix).

    ``served_fraction`` and ``critical_served_fraction`` are in [0, 1];
    ``mg_output`` maps each mobile generator to its attributed active
    output in kW per period (zero before the unit arrives).
    """

    scenario_id: str | None
    dt_minutes: float
    served_fraction: np.ndarray
    critical_served_fraction: np.ndarray
    mg_output: dict[str, np.ndarray]
    total_demand_kw: np.ndarray
    critical_demand_kw: np.ndarray

    @property
    def periods(self) -> int:
        return len(self.served_fraction)

    def served_energy_kwh(self) -> np.ndarray:
        return self.served_fraction * self.total_demand_kw * (self.dt_minutes / 60.0)

    def critical_energy_kwh(self) -> np.ndarray:
        return (self.critical_served_fraction * self.critical_demand_kw
                * (self.dt_minutes / 60.0))


@dataclass(frozen=True)
class ComparisonReport:
    delta_served_kwh: np.ndarray
    delta_critical_kwh: np.ndarray
    cumulative_served_kwh: np.ndarray
    cumulative_critical_kwh: np.ndarray
    pct_served_vs_baseline: float
    pct_critical_vs_baseline: float


def _scenario_id(solution: Solution, scenario) -> str:
    if scenario is not None:
        return getattr(scenario, "id", scenario)
    ids = solution.meta.get("scenario_ids", [])
    if len(ids) != 1:
        raise ValueError("solution covers several scenarios; pass one explicitly")
    return ids[0]


def _attributed_outputs(solution: Solution, net: Network, sid: str,
                        horizon: int) -> dict[str, np.ndarray]:
    """Split each bus's mobile-generation output across the units connected
    there, in proportion to their ratings (the model only bounds the sum)."""
    base = net.base_kva
    mgs = net.sorted_mobile_gens()
    out = {mg.id: np.zeros(horizon) for mg in mgs}
    if not mgs:
        return out
    for t in range(1, horizon + 1):
        for b in net.connectable_buses():
            p_kw = solution.get(MG_P, sid, t, (b.id,)) * base
            if p_kw <= 0.0:
                continue
            here = [mg for mg in mgs
                    if solution.get(CONNECTED, sid, t, (mg.id, b.id)) >= 0.5]
            cap = sum(mg.p_max for mg in here)
            if cap <= 0.0:
                continue
            for mg in here:
                out[mg.id][t - 1] += p_kw * (mg.p_max / cap)
    return out


def trajectory(solution: Solution, net: Network, scenario=None) -> RestorationTrajectory:
    """Service-level time series for one scenario of a solved model."""
    sid = _scenario_id(solution, scenario)
    horizon = int(solution.meta["horizon"])
    base = net.base_kva
    buses = net.sorted_buses()
    served = np.zeros(horizon)
    critical = np.zeros(horizon)
    total_demand = np.zeros(horizon)
    critical_demand = np.zeros(horizon)
    for t in range(1, horizon + 1):
        demand = sum(b.demand_p[t - 1] for b in buses)
        curtailed = sum(solution.value(CURTAIL_P, sid, t, (b.id,)) for b in buses) * base
        crit_demand = sum(b.demand_p[t - 1] for b in buses if b.critical)
        crit_curtailed = sum(solution.value(CURTAIL_P, sid, t, (b.id,))
                             for b in buses if b.critical) * base
        total_demand[t - 1] = demand
        critical_demand[t - 1] = crit_demand
        served[t - 1] = 1.0 if demand == 0 else 1.0 - curtailed / demand
        critical[t - 1] = 1.0 if crit_demand == 0 else 1.0 - crit_curtailed / crit_demand
    return RestorationTrajectory(
        scenario_id=sid,
        dt_minutes=float(solution.meta["dt_minutes"]),
        served_fraction=served,
        critical_served_fraction=critical,
        mg_output=_attributed_outputs(solution, net, sid, horizon),
        total_demand_kw=total_demand,
        critical_demand_kw=critical_demand,
    )


def aggregate_trajectory(solution: Solution, net: Network, scenarios) -> RestorationTrajectory:
    """Probability-weighted mean trajectory over a scenario set."""
    scens = list(getattr(scenarios, "scenarios", scenarios))
    if not scens:
        raise ValueError("no scenarios to aggregate")
    parts = [(s.probability, trajectory(solution, net, s)) for s in scens]
    horizon = parts[0][1].periods
    served = sum(pr * tr.served_fraction for pr, tr in parts)
    critical = sum(pr * tr.critical_served_fraction for pr, tr in parts)
    mg_ids = sorted({mid for _, tr in parts for mid in tr.mg_output})
    mg_output = {
        mid: sum(pr * tr.mg_output[mid] for pr, tr in parts) for mid in mg_ids
    }
    return RestorationTrajectory(
        scenario_id=None,
        dt_minutes=parts[0][1].dt_minutes,
        served_fraction=np.asarray(served),
        critical_served_fraction=np.asarray(critical),
        mg_output=mg_output,
        total_demand_kw=parts[0][1].total_demand_kw,
        critical_demand_kw=parts[0][1].critical_demand_kw,
    )


def utilization_rates(solution: Solution, net: Network, scenario=None):
    """Per-unit utilization: time-averaged attributed output over rating,
    counted from the period the unit connects.  Units never dispatched map
    to None and are excluded from the fleet figure.

    Returns (rates by mg id, capacity-weighted fleet rate or None).
    """
    sid = _scenario_id(solution, scenario)
    horizon = int(solution.meta["horizon"])
    outputs = _attributed_outputs(solution, net, sid, horizon)
    rates: dict[str, float | None] = {}
    used = []
    for mg in net.sorted_mobile_gens():
        connected = [
            t for t in range(1, horizon + 1)
            if any(solution.get(CONNECTED, sid, t, (mg.id, b.id)) >= 0.5
                   for b in net.connectable_buses())
        ]
        if not connected:
            rates[mg.id] = None
            continue
        avg = float(np.mean([outputs[mg.id][t - 1] for t in connected]))
        rates[mg.id] = avg / mg.p_max
        used.append((mg, avg))
    if not used:
        return rates, None
    fleet = sum(avg for _, avg in used) / sum(mg.p_max for mg, _ in used)
    return rates, fleet


def served_energy(solution: Solution, net: Network, scenarios):
    """(total_kwh, weighted_kwh, critical_kwh) expected over the scenarios.

    The weighted figure is the exact complement of the model objective:
    weighted demand energy minus weighted unserved energy.
    """
    scens = list(getattr(scenarios, "scenarios", scenarios))
    base = net.base_kva
    dt_h = float(solution.meta["dt_hours"])
    horizon = int(solution.meta["horizon"])
    total = weighted = critical = 0.0
    for s in scens:
        for t in range(1, horizon + 1):
            for b in net.sorted_buses():
                served_kw = (b.demand_p[t - 1]
                             - solution.value(CURTAIL_P, s.id, t, (b.id,)) * base)
                total += s.probability * served_kw * dt_h
                weighted += s.probability * b.weight * served_kw * dt_h
                if b.critical:
                    critical += s.probability * served_kw * dt_h
    return total, weighted, critical


def compare(a: RestorationTrajectory, b: RestorationTrajectory) -> ComparisonReport:
    """Deltas of trajectory ``a`` over baseline ``b`` (positive = better)."""
    if a.periods != b.periods:
        raise ValueError(f"horizon mismatch: {a.periods} vs {b.periods}")
    d_served = a.served_energy_kwh() - b.served_energy_kwh()
    d_crit = a.critical_energy_kwh() - b.critical_energy_kwh()
    cum_served = np.cumsum(d_served)
    cum_crit = np.cumsum(d_crit)
    base_served = float(np.sum(b.served_energy_kwh()))
    base_crit = float(np.sum(b.critical_energy_kwh()))
    pct_served = 100.0 * cum_served[-1] / base_served if base_served else 0.0
    pct_crit = 100.0 * cum_crit[-1] / base_crit if base_crit else 0.0
    return ComparisonReport(
        delta_served_kwh=d_served,
        delta_critical_kwh=d_crit,
        cumulative_served_kwh=cum_served,
        cumulative_critical_kwh=cum_crit,
        pct_served_vs_baseline=pct_served,
        pct_critical_vs_baseline=pct_crit,
    )


def emit_report(obj, fmt: str = "csv") -> str:
    """Render a trajectory or comparison; csv or aligned text.

    Trajectory columns are fixed: t, served_fraction,
    critical_served_fraction, then one column per mobile generator.
    """
    if isinstance(obj, RestorationTrajectory):
        mg_ids = sorted(obj.mg_output)
        header = ["t", "served_fraction", "critical_served_fraction"] + mg_ids
        rows = []
        for t in range(1, obj.periods + 1):
            row = [str(t), repr(float(obj.served_fraction[t - 1])),
                   repr(float(obj.critical_served_fraction[t - 1]))]
            row += [repr(float(obj.mg_output[mid][t - 1])) for mid in mg_ids]
            rows.append(row)
    elif isinstance(obj, ComparisonReport):
        header = ["t", "delta_served_kwh", "delta_critical_kwh",
                  "cum_delta_served_kwh", "cum_delta_critical_kwh"]
        rows = []
        for t in range(1, len(obj.delta_served_kwh) + 1):
            rows.append([
                str(t),
                repr(float(obj.delta_served_kwh[t - 1])),
                repr(float(obj.delta_critical_kwh[t - 1])),
                repr(float(obj.cumulative_served_kwh[t - 1])),
                repr(float(obj.cumulative_critical_kwh[t - 1])),
            ])
    else:
        raise TypeError(f"cannot report a {type(obj).__name__}")

    if fmt == "csv":
        return "\n".join([",".join(header)] + [",".join(r) for r in rows]) + "\n"
    if fmt == "text":
        widths = [max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i])
                  for i in range(len(header))]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
        for r in rows:
            lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}; expected 'csv' or 'text'")
