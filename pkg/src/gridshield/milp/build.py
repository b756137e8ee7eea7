"""Assembly of the stochastic restoration MILP.

One function per constraint family; ``build_model`` composes them in a
fixed order so identical inputs give byte-identical models.  Families are
tagged "eq1" .. "eq19b" plus "damage-coupling" for the rows that open
switches on damaged lines.

Sign conventions: each line carries a single flow variable per quantity,
positive from ``from_bus`` toward ``to_bus``; a closed line relates its
terminal voltages by ``v_to - v_from = -(r p + x q) / v1``; an open line is
decoupled through the big-M constant.
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple

from ..network import InvalidNetworkError, Line, Network, line_length_miles, validate
from .config import PlanningConfig
from .model import MilpModel
from .variables import (
    ARRIVAL_TIME,
    ARRIVE,
    BUILD,
    CONNECTED,
    CURTAIL_P,
    CURTAIL_Q,
    DEPTH,
    DG_ON,
    DG_P,
    DG_Q,
    DISPATCH,
    FLOW_P_ADDED,
    FLOW_P_EXISTING,
    FLOW_Q_ADDED,
    FLOW_Q_EXISTING,
    MG_P,
    MG_Q,
    PARENT,
    SWITCH,
    VOLTAGE,
    VariableKey,
    _sanitize,
    arrival_steps,
    index_variables,
)

SQRT2 = math.sqrt(2.0)
# budget row is kept in millions of dollars so its coefficients sit near 1
INVESTMENT_SCALE = 1e6


class ModelSize(NamedTuple):
    binaries: int
    continuous: int
    constraints: int


def _scens(scenarios):
    scens = list(getattr(scenarios, "scenarios", scenarios))
    if not scens:
        raise ValueError("at least one damage scenario is required")
    return sorted(scens, key=lambda s: s.id)


def _rn(*parts) -> str:
    return ".".join(_sanitize(str(p)) for p in parts if p is not None)


def compute_big_m(net: Network, cfg: PlanningConfig) -> float:
    """Smallest provably valid voltage-decoupling constant.

    The worst-case voltage difference between decoupled buses plus the
    worst-case drop term a closed line could contribute at full loading.
    """
    if cfg.big_m is not None:
        return cfg.big_m
    buses = net.sorted_buses()
    spread = max(b.v_max for b in buses) - min(b.v_min for b in buses)
    v1 = net.nominal_voltage_pu
    worst_drop = max(((ln.r + ln.x) * ln.capacity / v1 for ln in net.sorted_lines()),
                     default=0.0)
    return spread + worst_drop


def add_objective(model: MilpModel, net: Network, scenarios, cfg: PlanningConfig):
    """Probability- and priority-weighted unserved energy, in kWh.

    Curtailment variables are per-unit, so each coefficient is
    weight * probability * dt_hours * base_kva.
    """
    base = net.base_kva
    for s in _scens(scenarios):
        for t in range(1, cfg.horizon_periods + 1):
            for b in net.sorted_buses():
                coef = b.weight * s.probability * cfg.dt_hours * base
                model.add_objective_term(
                    model.index.get(CURTAIL_P, s.id, t, (b.id,)), coef)


def add_power_balance(model: MilpModel, net: Network, scenarios, cfg: PlanningConfig):
    """Active and reactive nodal balance: inflow + generation + curtailment
    equals demand plus outflow, per bus, period, and scenario."""
    idx = model.index
    base = net.base_kva
    conn_ids = {b.id for b in net.connectable_buses()}
    has_mg = bool(net.mobile_gens)
    dgs_at: dict[str, list] = {}
    for dg in net.sorted_dgs():
        dgs_at.setdefault(dg.bus, []).append(dg)
    for s in _scens(scenarios):
        for t in range(1, cfg.horizon_periods + 1):
            for b in net.sorted_buses():
                for comp, flow_e, flow_a, curt, gen_p, gen_mg, demand in (
                    ("p", FLOW_P_EXISTING, FLOW_P_ADDED, CURTAIL_P, DG_P, MG_P, b.demand_p),
                    ("q", FLOW_Q_EXISTING, FLOW_Q_ADDED, CURTAIL_Q, DG_Q, MG_Q, b.demand_q),
                ):
                    terms = []
                    for ln in net.sorted_lines():
                        kind = flow_a if ln.is_candidate else flow_e
                        if ln.to_bus == b.id:
                            terms.append((idx.get(kind, s.id, t, (ln.id,)), 1.0))
                        elif ln.from_bus == b.id:
                            terms.append((idx.get(kind, s.id, t, (ln.id,)), -1.0))
                    for dg in dgs_at.get(b.id, ()):
                        terms.append((idx.get(gen_p, s.id, t, (dg.id,)), 1.0))
                    if has_mg and b.id in conn_ids:
                        terms.append((idx.get(gen_mg, s.id, t, (b.id,)), 1.0))
                    terms.append((idx.get(curt, s.id, t, (b.id,)), 1.0))
                    model.add_constraint(
                        _rn(f"eq2{comp}", s.id, t, b.id), terms, "=",
                        demand[t - 1] / base, "eq2", (s.id, t, b.id))


def add_load_curtailment(model: MilpModel, net: Network, scenarios, cfg: PlanningConfig):
    """Curtailment capped by demand, with constant-power-factor coupling.

    A zero active demand fixes both curtailments to zero.
    """
    idx = model.index
    base = net.base_kva
    for s in _scens(scenarios):
        for t in range(1, cfg.horizon_periods + 1):
            for b in net.sorted_buses():
                pd = b.demand_p[t - 1] / base
                qd = b.demand_q[t - 1] / base
                p_col = idx.get(CURTAIL_P, s.id, t, (b.id,))
                q_col = idx.get(CURTAIL_Q, s.id, t, (b.id,))
                model.add_constraint(
                    _rn("eq3a", s.id, t, b.id), [(p_col, 1.0)], "<=", pd,
                    "eq3a", (s.id, t, b.id))
                if pd > 0.0:
                    terms = [(q_col, 1.0), (p_col, -qd / pd)]
                else:
                    terms = [(q_col, 1.0)]
                model.add_constraint(
                    _rn("eq3b", s.id, t, b.id), terms, "=", 0.0,
                    "eq3b", (s.id, t, b.id))


def _distflow_rows(model, net, s_id, t, line, p_kind, q_kind, big_m, tag):
    idx = model.index
    v1 = net.nominal_voltage_pu
    sw = idx.get(SWITCH, s_id, t, (line.id,))
    vt = idx.get(VOLTAGE, s_id, t, (line.to_bus,))
    vf = idx.get(VOLTAGE, s_id, t, (line.from_bus,))
    p = idx.get(p_kind, s_id, t, (line.id,))
    q = idx.get(q_kind, s_id, t, (line.id,))
    drop = [(vt, 1.0), (vf, -1.0), (p, line.r / v1), (q, line.x / v1)]
    model.add_constraint(
        _rn(tag, s_id, t, line.id, "hi"), drop + [(sw, big_m)], "<=", big_m,
        tag, (s_id, t, line.id))
    model.add_constraint(
        _rn(tag, s_id, t, line.id, "lo"), drop + [(sw, -big_m)], ">=", -big_m,
        tag, (s_id, t, line.id))


def add_voltage_drop(model: MilpModel, net: Network, scenarios, cfg: PlanningConfig):
    """Linearized branch voltage drop, switch-decoupled by big-M, plus the
    per-bus voltage band.  Existing lines are tagged eq4a, candidate
    underground lines eq17a."""
    big_m = compute_big_m(net, cfg)
    idx = model.index
    for s in _scens(scenarios):
        for t in range(1, cfg.horizon_periods + 1):
            for ln in net.sorted_lines():
                if ln.is_candidate:
                    _distflow_rows(model, net, s.id, t, ln,
                                   FLOW_P_ADDED, FLOW_Q_ADDED, big_m, "eq17a")
                else:
                    _distflow_rows(model, net, s.id, t, ln,
                                   FLOW_P_EXISTING, FLOW_Q_EXISTING, big_m, "eq4a")
            for b in net.sorted_buses():
                v = idx.get(VOLTAGE, s.id, t, (b.id,))
                model.add_constraint(_rn("eq4b", s.id, t, b.id, "hi"),
                                     [(v, 1.0)], "<=", b.v_max, "eq4b", (s.id, t, b.id))
                model.add_constraint(_rn("eq4b", s.id, t, b.id, "lo"),
                                     [(v, 1.0)], ">=", b.v_min, "eq4b", (s.id, t, b.id))


def _octagon_rows(model, s_id, t, line, p_kind, q_kind, tag):
    idx = model.index
    sw = idx.get(SWITCH, s_id, t, (line.id,))
    p = idx.get(p_kind, s_id, t, (line.id,))
    q = idx.get(q_kind, s_id, t, (line.id,))
    cap = line.capacity
    pieces = (
        ("a", [(p, 1.0)], cap),
        ("b", [(q, 1.0)], cap),
        ("c", [(p, 1.0), (q, 1.0)], SQRT2 * cap),
        ("d", [(p, 1.0), (q, -1.0)], SQRT2 * cap),
    )
    for sub, terms, bound in pieces:
        model.add_constraint(
            _rn(f"{tag}{sub}", s_id, t, line.id, "hi"),
            terms + [(sw, -bound)], "<=", 0.0, tag, (s_id, t, line.id))
        model.add_constraint(
            _rn(f"{tag}{sub}", s_id, t, line.id, "lo"),
            terms + [(sw, bound)], ">=", 0.0, tag, (s_id, t, line.id))


def add_flow_limits(model: MilpModel, net: Network, scenarios, cfg: PlanningConfig):
    """Octagonal apparent-power limits, forced to zero on open switches.
    Existing lines are tagged eq5, candidate lines eq18."""
    for s in _scens(scenarios):
        for t in range(1, cfg.horizon_periods + 1):
            for ln in net.sorted_lines():
                if ln.is_candidate:
                    _octagon_rows(model, s.id, t, ln, FLOW_P_ADDED, FLOW_Q_ADDED, "eq18")
                else:
                    _octagon_rows(model, s.id, t, ln, FLOW_P_EXISTING, FLOW_Q_EXISTING, "eq5")


def add_dg_limits(model: MilpModel, net: Network, scenarios, cfg: PlanningConfig):
    """Distributed-generator output within its rating when committed, zero
    otherwise."""
    idx = model.index
    base = net.base_kva
    for s in _scens(scenarios):
        for t in range(1, cfg.horizon_periods + 1):
            for dg in net.sorted_dgs():
                on = idx.get(DG_ON, s.id, t, (dg.id,))
                p = idx.get(DG_P, s.id, t, (dg.id,))
                q = idx.get(DG_Q, s.id, t, (dg.id,))
                sub = (s.id, t, dg.id)
                model.add_constraint(_rn("eq6p", s.id, t, dg.id, "hi"),
                                     [(p, 1.0), (on, -dg.p_max / base)], "<=", 0.0, "eq6", sub)
                model.add_constraint(_rn("eq6p", s.id, t, dg.id, "lo"),
                                     [(p, 1.0), (on, -dg.p_min / base)], ">=", 0.0, "eq6", sub)
                model.add_constraint(_rn("eq6q", s.id, t, dg.id, "hi"),
                                     [(q, 1.0), (on, -dg.q_max / base)], "<=", 0.0, "eq6", sub)
                model.add_constraint(_rn("eq6q", s.id, t, dg.id, "lo"),
                                     [(q, 1.0), (on, -dg.q_min / base)], ">=", 0.0, "eq6", sub)


def add_radiality(model: MilpModel, net: Network, scenarios, cfg: PlanningConfig):
    """Spanning-forest operation: a closed line assigns a parent to exactly
    one of its ends, every bus has at most one parent, the root has none.

    Parent assignment alone still admits one directed cycle inside an
    island that never touches the root, so depth potentials (strictly
    increasing from parent to child) close that hole; they are tagged
    "plumbing" since they are not one of the numbered families.
    """
    idx = model.index
    root = net.root_id
    n_buses = len(net.buses)
    incident: dict[str, list[Line]] = {b.id: [] for b in net.sorted_buses()}
    for ln in net.sorted_lines():
        incident[ln.from_bus].append(ln)
        incident[ln.to_bus].append(ln)
    for s in _scens(scenarios):
        for t in range(1, cfg.horizon_periods + 1):
            for ln in net.sorted_lines():
                model.add_constraint(
                    _rn("eq7a", s.id, t, ln.id),
                    [(idx.get(PARENT, s.id, t, (ln.id, ln.from_bus)), 1.0),
                     (idx.get(PARENT, s.id, t, (ln.id, ln.to_bus)), 1.0),
                     (idx.get(SWITCH, s.id, t, (ln.id,)), -1.0)],
                    "=", 0.0, "eq7a", (s.id, t, ln.id))
                # depth[child] >= depth[parent] + 1 when the parent edge is
                # assigned; vacuous otherwise
                for child, parent in ((ln.from_bus, ln.to_bus),
                                      (ln.to_bus, ln.from_bus)):
                    model.add_constraint(
                        _rn("depth", s.id, t, ln.id, child),
                        [(idx.get(DEPTH, s.id, t, (child,)), 1.0),
                         (idx.get(DEPTH, s.id, t, (parent,)), -1.0),
                         (idx.get(PARENT, s.id, t, (ln.id, child)), -float(n_buses))],
                        ">=", 1.0 - n_buses, "plumbing", (s.id, t, ln.id, child))
            for b in net.sorted_buses():
                lines = incident[b.id]
                if not lines:
                    continue
                terms = [(idx.get(PARENT, s.id, t, (ln.id, b.id)), 1.0) for ln in lines]
                model.add_constraint(_rn("eq7b", s.id, t, b.id), terms, "<=", 1.0,
                                     "eq7b", (s.id, t, b.id))
            root_lines = incident[root]
            if root_lines:
                terms = [(idx.get(PARENT, s.id, t, (ln.id, root)), 1.0) for ln in root_lines]
                model.add_constraint(_rn("eq7c", s.id, t), terms, "=", 0.0,
                                     "eq7c", (s.id, t))


def add_mg_logistics(model: MilpModel, net: Network, scenarios, cfg: PlanningConfig):
    """Mobile-generator dispatch, travel timing, and connection tracking.

    Dispatch is once per unit from its home depot; the arrival indicator
    fires exactly at the travel-step period and the connection indicator
    latches from then on.
    """
    idx = model.index
    mgs = net.sorted_mobile_gens()
    if not mgs:
        return
    conn = net.connectable_buses()
    periods = range(1, cfg.horizon_periods + 1)
    for s in _scens(scenarios):
        for b in conn:
            terms = [(idx.get(DISPATCH, s.id, None, (mg.home_depot, mg.id, b.id)), 1.0)
                     for mg in mgs]
            model.add_constraint(_rn("eq8", s.id, b.id), terms, "<=",
                                 float(b.max_mobile_gens), "eq8", (s.id, b.id))
        for mg in mgs:
            depot = net.depots[mg.home_depot]
            terms = [(idx.get(DISPATCH, s.id, None, (mg.home_depot, mg.id, b.id)), 1.0)
                     for b in conn]
            model.add_constraint(_rn("eq9", s.id, mg.id), terms, "<=", 1.0,
                                 "eq9", (s.id, mg.id))
            for b in conn:
                steps = arrival_steps(depot.travel_minutes[b.id], cfg.dt_minutes)
                dsp = idx.get(DISPATCH, s.id, None, (mg.home_depot, mg.id, b.id))
                at = idx.get(ARRIVAL_TIME, s.id, None, (mg.home_depot, mg.id, b.id))
                sub = (s.id, mg.id, b.id)
                model.add_constraint(_rn("eq10", s.id, mg.home_depot, mg.id, b.id),
                                     [(at, 1.0), (dsp, -float(steps))], "=", 0.0,
                                     "eq10", sub)
                t_gamma = [(idx.get(ARRIVE, s.id, t, (mg.id, b.id)), float(t))
                           for t in periods]
                model.add_constraint(_rn("eq11", s.id, mg.id, b.id),
                                     t_gamma + [(at, -1.0)], ">=", 0.0, "eq11", sub)
                model.add_constraint(_rn("eq12", s.id, mg.id, b.id),
                                     t_gamma + [(at, -1.0)], "<=", 1.0 - cfg.epsilon,
                                     "eq12", sub)
                gamma = [(idx.get(ARRIVE, s.id, t, (mg.id, b.id)), 1.0) for t in periods]
                model.add_constraint(_rn("eq13", s.id, mg.id, b.id),
                                     gamma + [(dsp, -1.0)], "=", 0.0, "eq13", sub)
                for t in periods:
                    terms = [(idx.get(CONNECTED, s.id, t, (mg.id, b.id)), 1.0)]
                    terms += [(idx.get(ARRIVE, s.id, u, (mg.id, b.id)), -1.0)
                              for u in range(1, t + 1)]
                    model.add_constraint(_rn("eq14", s.id, t, mg.id, b.id),
                                         terms, "=", 0.0, "eq14", (s.id, t, mg.id, b.id))


def add_mg_output(model: MilpModel, net: Network, scenarios, cfg: PlanningConfig):
    """Bus-level mobile-generation output capped by the connected units'
    combined ratings."""
    idx = model.index
    mgs = net.sorted_mobile_gens()
    if not mgs:
        return
    base = net.base_kva
    for s in _scens(scenarios):
        for t in range(1, cfg.horizon_periods + 1):
            for b in net.connectable_buses():
                kappa = {mg.id: idx.get(CONNECTED, s.id, t, (mg.id, b.id)) for mg in mgs}
                model.add_constraint(
                    _rn("eq15", s.id, t, b.id),
                    [(idx.get(MG_P, s.id, t, (b.id,)), 1.0)]
                    + [(kappa[mg.id], -mg.p_max / base) for mg in mgs],
                    "<=", 0.0, "eq15", (s.id, t, b.id))
                model.add_constraint(
                    _rn("eq16", s.id, t, b.id),
                    [(idx.get(MG_Q, s.id, t, (b.id,)), 1.0)]
                    + [(kappa[mg.id], -mg.q_max / base) for mg in mgs],
                    "<=", 0.0, "eq16", (s.id, t, b.id))


def compute_investment_cost(selection: Iterable[Line], cfg: PlanningConfig) -> float:
    """Dollar cost of building the selected underground lines: construction
    per mile plus two remote-controlled switches per line."""
    return sum(line_length_miles(ln) * cfg.cost_per_mile + 2.0 * cfg.cost_rcs
               for ln in selection)


def add_investment_constraints(model: MilpModel, net: Network, scenarios, cfg: PlanningConfig):
    """First-stage build decisions: a candidate may close only if built,
    total cost within budget, count within the allowed number."""
    idx = model.index
    candidates = net.candidate_lines()
    if not candidates:
        return
    for s in _scens(scenarios):
        for t in range(1, cfg.horizon_periods + 1):
            for ln in candidates:
                model.add_constraint(
                    _rn("eq17b", s.id, t, ln.id),
                    [(idx.get(SWITCH, s.id, t, (ln.id,)), 1.0),
                     (idx.get(BUILD, None, None, (ln.id,)), -1.0)],
                    "<=", 0.0, "eq17b", (s.id, t, ln.id))
    cost_terms = [
        (idx.get(BUILD, None, None, (ln.id,)),
         compute_investment_cost([ln], cfg) / INVESTMENT_SCALE)
        for ln in candidates
    ]
    model.add_constraint("eq19a", cost_terms, "<=", cfg.budget / INVESTMENT_SCALE,
                         "eq19a", ())
    if cfg.max_underground is not None:
        count_terms = [(idx.get(BUILD, None, None, (ln.id,)), 1.0) for ln in candidates]
        model.add_constraint("eq19b", count_terms, "<=", float(cfg.max_underground),
                             "eq19b", ())


def add_damage_coupling(model: MilpModel, net: Network, scenarios, cfg: PlanningConfig):
    """Scenario damage forces the switch open on each damaged existing line."""
    idx = model.index
    for s in _scens(scenarios):
        damaged = [lid for lid, ok in sorted(s.availability.items()) if not ok]
        for t in range(1, cfg.horizon_periods + 1):
            for lid in damaged:
                model.add_constraint(
                    _rn("dmg", s.id, t, lid),
                    [(idx.get(SWITCH, s.id, t, (lid,)), 1.0)],
                    "<=", 0.0, "damage-coupling", (s.id, t, lid))


def build_model(net: Network, scenarios, cfg: PlanningConfig,
                plan: Iterable[str] | None = None) -> MilpModel:
    """Compose the full restoration MILP.

    ``plan`` fixes the first-stage build variables: candidate ids in the
    set are forced built, all others forced out (used to evaluate a stored
    investment plan under new scenarios).
    """
    report = validate(net)
    if not report.ok:
        raise InvalidNetworkError(report)
    scens = _scens(scenarios)
    existing_ids = {ln.id for ln in net.existing_lines()}
    for s in scens:
        if set(s.availability) != existing_ids:
            raise ValueError(
                f"scenario {s.id!r} availability does not cover exactly the existing lines")

    index = index_variables(net, scens, cfg)
    model = MilpModel(index, meta={
        "dt_hours": cfg.dt_hours,
        "dt_minutes": cfg.dt_minutes,
        "base_kva": net.base_kva,
        "horizon": cfg.horizon_periods,
        "scenario_ids": [s.id for s in scens],
        "probabilities": {s.id: s.probability for s in scens},
        "big_m": compute_big_m(net, cfg),
    })
    add_objective(model, net, scens, cfg)
    add_power_balance(model, net, scens, cfg)
    add_load_curtailment(model, net, scens, cfg)
    add_voltage_drop(model, net, scens, cfg)
    add_flow_limits(model, net, scens, cfg)
    add_dg_limits(model, net, scens, cfg)
    add_radiality(model, net, scens, cfg)
    add_mg_logistics(model, net, scens, cfg)
    add_mg_output(model, net, scens, cfg)
    add_investment_constraints(model, net, scens, cfg)
    add_damage_coupling(model, net, scens, cfg)

    if plan is not None:
        plan = set(plan)
        candidate_ids = {ln.id for ln in net.candidate_lines()}
        unknown = plan - candidate_ids
        if unknown:
            raise ValueError(f"plan names non-candidate lines: {sorted(unknown)}")
        overrides = {}
        for lid in sorted(candidate_ids):
            val = 1.0 if lid in plan else 0.0
            overrides[VariableKey(BUILD, None, None, (lid,))] = (val, val)
        model.apply_bounds(overrides)
    return model


def predicted_model_size(n_scenarios: int, n_periods: int, n_lines: int,
                         n_buses: int, n_mobile_gens: int, n_candidates: int,
                         n_dgs: int = 0) -> ModelSize:
    """Reference closed-form size estimate of the stochastic model.

    The symbols are opaque cardinalities; see the scaling tests for how the
    terms line up with the families this builder actually emits.
    """
    pi, t, l, n = n_scenarios, n_periods, n_lines, n_buses
    xi, eta, dg = n_mobile_gens, n_candidates, n_dgs
    binaries = pi * t * (2 * l + 3 * n) + pi * xi * n + n ** 2 + eta
    continuous = 2 * pi * t * (n + l + eta + dg) + 3 * pi * n * xi
    constraints = (
        t * pi * (7 * n + 5 * l + 3 * xi * n + 7 * eta + 2 * dg + 2 * l + 1 + 2 * n)
        + 2 * pi * xi + 4 * pi * n * xi + eta + 2
    )
    return ModelSize(binaries, continuous, constraints)
