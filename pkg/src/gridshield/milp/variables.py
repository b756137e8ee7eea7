"""Dense, deterministically ordered variable index for the restoration MILP.

Every decision variable is addressed by a key (kind, scenario, period,
entity).  Keys map to contiguous column numbers in a canonical order
(kind rank, then scenario id, then period, then entity), so two builds from
identical inputs produce identical columns and names.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator, NamedTuple

from ..network import Network
from .config import PlanningConfig

# variable kinds, in canonical column order
FLOW_P_EXISTING = "flow_p_existing"
FLOW_Q_EXISTING = "flow_q_existing"
FLOW_P_ADDED = "flow_p_added"
FLOW_Q_ADDED = "flow_q_added"
CURTAIL_P = "curtail_p"
CURTAIL_Q = "curtail_q"
DG_P = "dg_p"
DG_Q = "dg_q"
MG_P = "mg_p"
MG_Q = "mg_q"
VOLTAGE = "voltage"
DEPTH = "depth"
SWITCH = "switch"
DG_ON = "dg_on"
PARENT = "parent"
DISPATCH = "dispatch"
ARRIVE = "arrive"
CONNECTED = "connected"
ARRIVAL_TIME = "arrival_time"
BUILD = "build"

KIND_ORDER = (
    FLOW_P_EXISTING, FLOW_Q_EXISTING, FLOW_P_ADDED, FLOW_Q_ADDED,
    CURTAIL_P, CURTAIL_Q, DG_P, DG_Q, MG_P, MG_Q, VOLTAGE, DEPTH,
    SWITCH, DG_ON, PARENT, DISPATCH, ARRIVE, CONNECTED,
    ARRIVAL_TIME, BUILD,
)
_KIND_RANK = {k: i for i, k in enumerate(KIND_ORDER)}

BINARY_KINDS = frozenset({SWITCH, DG_ON, PARENT, DISPATCH, ARRIVE, CONNECTED, BUILD})

_NAME_CODE = {
    FLOW_P_EXISTING: "pE", FLOW_Q_EXISTING: "qE",
    FLOW_P_ADDED: "pA", FLOW_Q_ADDED: "qA",
    CURTAIL_P: "lcP", CURTAIL_Q: "lcQ",
    DG_P: "dgP", DG_Q: "dgQ", MG_P: "mgP", MG_Q: "mgQ",
    VOLTAGE: "v", DEPTH: "dep", SWITCH: "sw", DG_ON: "on", PARENT: "par",
    DISPATCH: "dsp", ARRIVE: "arr", CONNECTED: "con",
    ARRIVAL_TIME: "at", BUILD: "bld",
}

_SANITIZE = re.compile(r"[^A-Za-z0-9_]")


class VariableKey(NamedTuple):
    kind: str
    scenario: str | None
    t: int | None
    entity: tuple[str, ...]


@dataclass(frozen=True)
class VarDef:
    key: VariableKey
    name: str
    lb: float
    ub: float
    binary: bool


def _sanitize(token: str) -> str:
    return _SANITIZE.sub(".", token)


def make_name(key: VariableKey) -> str:
    parts = [_NAME_CODE[key.kind]]
    if key.scenario is not None:
        parts.append(_sanitize(key.scenario))
    if key.t is not None:
        parts.append(str(key.t))
    parts.extend(_sanitize(e) for e in key.entity)
    return ".".join(parts)


class VariableIndex:
    """Ordered variable table with key and name lookup."""

    def __init__(self, defs: list[VarDef]):
        self.defs: tuple[VarDef, ...] = tuple(defs)
        self._by_key = {d.key: i for i, d in enumerate(self.defs)}
        self._by_name = {d.name: i for i, d in enumerate(self.defs)}
        if len(self._by_key) != len(self.defs):
            raise ValueError("duplicate variable keys")
        if len(self._by_name) != len(self.defs):
            raise ValueError("variable name collision; rename entity ids")

    def __len__(self) -> int:
        return len(self.defs)

    def __iter__(self) -> Iterator[VarDef]:
        return iter(self.defs)

    def col(self, key: VariableKey) -> int:
        return self._by_key[key]

    def get(self, kind, scenario=None, t=None, entity=()) -> int:
        return self._by_key[VariableKey(kind, scenario, t, tuple(entity))]

    def col_by_name(self, name: str) -> int:
        return self._by_name[name]

    def has(self, kind, scenario=None, t=None, entity=()) -> bool:
        return VariableKey(kind, scenario, t, tuple(entity)) in self._by_key

    def by_kind(self, kind: str) -> list[tuple[int, VarDef]]:
        return [(i, d) for i, d in enumerate(self.defs) if d.key.kind == kind]

    def kind_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for d in self.defs:
            out[d.key.kind] = out.get(d.key.kind, 0) + 1
        return out

    @property
    def n_binary(self) -> int:
        return sum(1 for d in self.defs if d.binary)

    @property
    def n_continuous(self) -> int:
        return len(self.defs) - self.n_binary


def arrival_steps(travel_minutes: float, dt_minutes: float) -> int:
    """Travel-plus-setup time rounded up to whole periods (at least one)."""
    return max(1, math.ceil(travel_minutes / dt_minutes - 1e-9))


def index_variables(net: Network, scenarios, cfg: PlanningConfig) -> VariableIndex:
    """Enumerate every model variable with bounds and integrality.

    Box bounds come straight from the instance: curtailment within demand,
    voltage within its allowed band (root pinned to nominal while the
    substation is available), flows within line capacity, and generator
    outputs within ratings.  Dispatch to buses that cannot be reached
    within the horizon is fixed to zero.
    """
    if net.horizon != cfg.horizon_periods:
        raise ValueError(
            f"network horizon {net.horizon} does not match "
            f"config horizon_periods {cfg.horizon_periods}"
        )
    scen_ids = sorted(s.id for s in scenarios)
    periods = range(1, cfg.horizon_periods + 1)
    existing = net.existing_lines()
    candidates = net.candidate_lines()
    buses = net.sorted_buses()
    dgs = net.sorted_dgs()
    mgs = net.sorted_mobile_gens()
    conn = net.connectable_buses()
    base = net.base_kva
    root = net.root_id
    avail = {s.id: s.availability for s in scenarios}

    defs: list[VarDef] = []

    def add(kind, scenario, t, entity, lb, ub):
        key = VariableKey(kind, scenario, t, tuple(entity))
        defs.append(VarDef(key, make_name(key), float(lb), float(ub),
                           kind in BINARY_KINDS))

    for pi in scen_ids:
        for t in periods:
            for ln in existing:
                add(FLOW_P_EXISTING, pi, t, (ln.id,), -ln.capacity, ln.capacity)
    for pi in scen_ids:
        for t in periods:
            for ln in existing:
                add(FLOW_Q_EXISTING, pi, t, (ln.id,), -ln.capacity, ln.capacity)
    for pi in scen_ids:
        for t in periods:
            for ln in candidates:
                add(FLOW_P_ADDED, pi, t, (ln.id,), -ln.capacity, ln.capacity)
    for pi in scen_ids:
        for t in periods:
            for ln in candidates:
                add(FLOW_Q_ADDED, pi, t, (ln.id,), -ln.capacity, ln.capacity)

    for pi in scen_ids:
        for t in periods:
            for b in buses:
                add(CURTAIL_P, pi, t, (b.id,), 0.0, b.demand_p[t - 1] / base)
    for pi in scen_ids:
        for t in periods:
            for b in buses:
                qd = b.demand_q[t - 1] / base
                if b.demand_p[t - 1] == 0.0:
                    lo = hi = 0.0
                else:
                    lo, hi = min(0.0, qd), max(0.0, qd)
                add(CURTAIL_Q, pi, t, (b.id,), lo, hi)

    for pi in scen_ids:
        for t in periods:
            for dg in dgs:
                add(DG_P, pi, t, (dg.id,), min(0.0, dg.p_min / base), max(0.0, dg.p_max / base))
    for pi in scen_ids:
        for t in periods:
            for dg in dgs:
                add(DG_Q, pi, t, (dg.id,), min(0.0, dg.q_min / base), max(0.0, dg.q_max / base))

    if mgs:
        p_cap = sum(m.p_max for m in mgs) / base
        q_cap = sum(m.q_max for m in mgs) / base
        for pi in scen_ids:
            for t in periods:
                for b in conn:
                    add(MG_P, pi, t, (b.id,), 0.0, p_cap)
        for pi in scen_ids:
            for t in periods:
                for b in conn:
                    add(MG_Q, pi, t, (b.id,), 0.0, q_cap)

    for pi in scen_ids:
        for t in periods:
            for b in buses:
                if b.id == root and cfg.substation_available:
                    add(VOLTAGE, pi, t, (b.id,), net.nominal_voltage_pu, net.nominal_voltage_pu)
                else:
                    add(VOLTAGE, pi, t, (b.id,), b.v_min, b.v_max)

    # tree-depth potentials anchoring the parent orientation (forest proof)
    for pi in scen_ids:
        for t in periods:
            for b in buses:
                add(DEPTH, pi, t, (b.id,), 0.0, float(len(buses) - 1))

    for pi in scen_ids:
        for t in periods:
            for ln in net.sorted_lines():
                if ln.is_candidate or ln.switchable:
                    lb, ub = 0.0, 1.0
                elif avail[pi].get(ln.id, 1):
                    lb = ub = 1.0  # intact line without a switch stays closed
                else:
                    lb = ub = 0.0
                add(SWITCH, pi, t, (ln.id,), lb, ub)

    for pi in scen_ids:
        for t in periods:
            for dg in dgs:
                if dg.bus == root:
                    val = 1.0 if cfg.substation_available else 0.0
                    add(DG_ON, pi, t, (dg.id,), val, val)
                else:
                    add(DG_ON, pi, t, (dg.id,), 0.0, 1.0)

    for pi in scen_ids:
        for t in periods:
            for ln in net.sorted_lines():
                for child in (ln.from_bus, ln.to_bus):
                    add(PARENT, pi, t, (ln.id, child), 0.0, 1.0)

    for pi in scen_ids:
        for mg in mgs:
            depot = net.depots[mg.home_depot]
            for b in conn:
                steps = arrival_steps(depot.travel_minutes[b.id], cfg.dt_minutes)
                ub = 0.0 if steps > cfg.horizon_periods else 1.0
                add(DISPATCH, pi, None, (mg.home_depot, mg.id, b.id), 0.0, ub)

    for pi in scen_ids:
        for t in periods:
            for mg in mgs:
                for b in conn:
                    add(ARRIVE, pi, t, (mg.id, b.id), 0.0, 1.0)
    for pi in scen_ids:
        for t in periods:
            for mg in mgs:
                for b in conn:
                    add(CONNECTED, pi, t, (mg.id, b.id), 0.0, 1.0)

    for pi in scen_ids:
        for mg in mgs:
            for b in conn:
                add(ARRIVAL_TIME, pi, None, (mg.home_depot, mg.id, b.id),
                    0.0, float(cfg.horizon_periods))

    for ln in candidates:
        add(BUILD, None, None, (ln.id,), 0.0, 1.0)

    return VariableIndex(defs)
