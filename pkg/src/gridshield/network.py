"""Distribution-network planning instance: data model, ingestion, validation.

A planning instance is a JSON document with top-level keys ``buses``,
``lines``, ``dgs``, ``mobile_gens``, ``depots``, ``base_mva``,
``nominal_voltage_pu`` (and optionally ``horizon``).  Electrical impedances
and line capacities are given in per-unit on ``base_mva``; demands and
generator ratings are given in kW/kVAr and converted to per-unit at the
optimization boundary, which keeps parse/emit byte-exact round trips.
Lengths are in feet, travel times in minutes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

EXISTING = "existing"
CANDIDATE = "candidate"

DEFAULT_V_MIN = 0.95
DEFAULT_V_MAX = 1.05
DEFAULT_CRITICAL_WEIGHT = 10.0
FEET_PER_MILE = 5280.0


class NetworkError(ValueError):
    """Base class for network ingestion failures."""


class SchemaError(NetworkError):
    """Document does not match the instance schema; message names the path."""


class IntegrityError(NetworkError):
    """Cross-references (bus ids, depot ids) do not resolve."""


class InvalidNetworkError(NetworkError):
    """A structurally parseable document violates network invariants."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        lines = "; ".join(v.message for v in report.violations)
        super().__init__(f"network invalid: {lines}")


@dataclass(frozen=True)
class Bus:
    """A load/connection point.

    ``demand_p``/``demand_q`` are per-period series in kW/kVAr whose length
    equals the network horizon.  ``weight`` is the service priority used by
    the restoration objective, ``max_mobile_gens`` the number of mobile
    units that may connect here (0 = no connection point).
    """

    id: str
    demand_p: np.ndarray
    demand_q: np.ndarray
    weight: float = 1.0
    critical: bool = False
    v_min: float = DEFAULT_V_MIN
    v_max: float = DEFAULT_V_MAX
    max_mobile_gens: int = 0
    is_root: bool = False


@dataclass(frozen=True)
class Line:
    """A distribution line, either an existing overhead segment or a
    candidate underground addition (candidates always carry a switch)."""

    id: str
    from_bus: str
    to_bus: str
    r: float
    x: float
    capacity: float
    length_ft: float
    kind: str = EXISTING
    switchable: bool = True

    @property
    def is_candidate(self) -> bool:
        return self.kind == CANDIDATE


@dataclass(frozen=True)
class DGUnit:
    """Stationary distributed generator (the substation is modeled as one
    of these at the root bus).  Ratings in kW/kVAr."""

    id: str
    bus: str
    p_max: float
    p_min: float = 0.0
    q_max: float = 0.0
    q_min: float = 0.0


@dataclass(frozen=True)
class MobileGen:
    """Truck-mounted generator staged at ``home_depot``.  Ratings in kW/kVAr."""

    id: str
    p_max: float
    q_max: float
    home_depot: str


@dataclass(frozen=True)
class Depot:
    """Staging site; ``travel_minutes`` maps bus id to travel-plus-setup time."""

    id: str
    travel_minutes: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


@dataclass(frozen=True)
class Network:
    """Immutable planning instance.  Safe to share across threads."""

    buses: dict[str, Bus]
    lines: dict[str, Line]
    dgs: tuple[DGUnit, ...] = ()
    mobile_gens: dict[str, MobileGen] = field(default_factory=dict)
    depots: dict[str, Depot] = field(default_factory=dict)
    base_mva: float = 1.0
    nominal_voltage_pu: float = 1.0
    horizon: int = 24

    @property
    def base_kva(self) -> float:
        return self.base_mva * 1000.0

    def kw_to_pu(self, kw):
        return np.asarray(kw, dtype=float) / self.base_kva

    def pu_to_kw(self, pu):
        return np.asarray(pu, dtype=float) * self.base_kva

    @property
    def root_id(self) -> str:
        roots = [b.id for b in self.buses.values() if b.is_root]
        if len(roots) != 1:
            raise InvalidNetworkError(
                ValidationReport(
                    (
                        Violation(
                            "root", ",".join(roots) or "-",
                            f"expected exactly one root bus, found {len(roots)}",
                        ),
                    )
                )
            )
        return roots[0]

    def existing_lines(self) -> list[Line]:
        return [ln for _, ln in sorted(self.lines.items()) if not ln.is_candidate]

    def candidate_lines(self) -> list[Line]:
        return [ln for _, ln in sorted(self.lines.items()) if ln.is_candidate]

    def sorted_buses(self) -> list[Bus]:
        return [b for _, b in sorted(self.buses.items())]

    def sorted_lines(self) -> list[Line]:
        return [ln for _, ln in sorted(self.lines.items())]

    def sorted_dgs(self) -> list[DGUnit]:
        return sorted(self.dgs, key=lambda d: d.id)

    def sorted_mobile_gens(self) -> list[MobileGen]:
        return [m for _, m in sorted(self.mobile_gens.items())]

    def connectable_buses(self) -> list[Bus]:
        """Buses that can host at least one mobile generator."""
        return [b for b in self.sorted_buses() if b.max_mobile_gens > 0]


def line_length_miles(line: Line) -> float:
    """Physical line length in miles (instance files carry feet)."""
    return line.length_ft / FEET_PER_MILE


def adjacency(net: Network, bus: str) -> list[tuple[str, Line]]:
    """Neighbors of ``bus`` over all lines (existing and candidate).

    Returns (neighbor id, line) pairs sorted by neighbor then line id; the
    relation is symmetric and has no self-loops.
    """
    if bus not in net.buses:
        raise KeyError(f"unknown bus id {bus!r}")
    out = []
    for ln in net.lines.values():
        if ln.from_bus == bus:
            out.append((ln.to_bus, ln))
        elif ln.to_bus == bus:
            out.append((ln.from_bus, ln))
    out.sort(key=lambda pair: (pair[0], pair[1].id))
    return out


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _require(mapping, key, path, types=None):
    if key not in mapping:
        raise SchemaError(f"{path}: missing required field {key!r}")
    value = mapping[key]
    if types is not None and not isinstance(value, types):
        raise SchemaError(f"{path}.{key}: expected {types}, got {type(value).__name__}")
    return value


def _number(mapping, key, path, default=None):
    if key not in mapping:
        if default is None:
            raise SchemaError(f"{path}: missing required field {key!r}")
        return float(default)
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{path}.{key}: expected a number")
    return float(value)


def _demand_series(entry, key, horizon, path) -> np.ndarray:
    raw = entry.get(key, 0.0)
    profile = entry.get("profile")
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        if profile is not None:
            series = np.asarray([float(raw) * float(m) for m in profile], dtype=float)
        else:
            series = np.full(horizon, float(raw), dtype=float)
    elif isinstance(raw, list):
        if profile is not None:
            raise SchemaError(f"{path}.{key}: explicit series cannot be combined with a profile")
        series = np.asarray([float(v) for v in raw], dtype=float)
    else:
        raise SchemaError(f"{path}.{key}: expected a number or list of numbers")
    return series


def parse_network(text) -> Network:
    """Parse and validate a planning-instance document.

    ``text`` is a JSON string (or an already-decoded dict).  Raises
    SchemaError / IntegrityError for malformed documents and
    InvalidNetworkError when invariants fail.
    """
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"document is not valid JSON: {exc}") from exc
    else:
        doc = text
    if not isinstance(doc, dict):
        raise SchemaError("$: top level must be an object")

    base_mva = _number(doc, "base_mva", "$", default=1.0)
    nominal_v = _number(doc, "nominal_voltage_pu", "$", default=1.0)
    horizon = doc.get("horizon", 24)
    if isinstance(horizon, bool) or not isinstance(horizon, int) or horizon < 1:
        raise SchemaError("$.horizon: expected a positive integer")

    buses: dict[str, Bus] = {}
    for i, entry in enumerate(_require(doc, "buses", "$", list)):
        path = f"$.buses[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{path}: expected an object")
        bid = str(_require(entry, "id", path))
        if bid in buses:
            raise SchemaError(f"{path}: duplicate bus id {bid!r}")
        critical = bool(entry.get("critical", False))
        default_w = DEFAULT_CRITICAL_WEIGHT if critical else 1.0
        buses[bid] = Bus(
            id=bid,
            demand_p=_demand_series(entry, "demand_p", horizon, path),
            demand_q=_demand_series(entry, "demand_q", horizon, path),
            weight=_number(entry, "weight", path, default=default_w),
            critical=critical,
            v_min=_number(entry, "v_min", path, default=DEFAULT_V_MIN),
            v_max=_number(entry, "v_max", path, default=DEFAULT_V_MAX),
            max_mobile_gens=int(entry.get("max_mobile_gens", 0)),
            is_root=bool(entry.get("is_root", False)),
        )

    lines: dict[str, Line] = {}
    for i, entry in enumerate(_require(doc, "lines", "$", list)):
        path = f"$.lines[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{path}: expected an object")
        lid = str(_require(entry, "id", path))
        if lid in lines:
            raise SchemaError(f"{path}: duplicate line id {lid!r}")
        kind = str(entry.get("kind", EXISTING))
        if kind not in (EXISTING, CANDIDATE):
            raise SchemaError(f"{path}.kind: expected {EXISTING!r} or {CANDIDATE!r}")
        lines[lid] = Line(
            id=lid,
            from_bus=str(_require(entry, "from_bus", path)),
            to_bus=str(_require(entry, "to_bus", path)),
            r=_number(entry, "r", path),
            x=_number(entry, "x", path),
            capacity=_number(entry, "capacity", path),
            length_ft=_number(entry, "length_ft", path),
            kind=kind,
            switchable=bool(entry.get("switchable", True)),
        )

    dgs = []
    seen_dg_ids: set[str] = set()
    for i, entry in enumerate(doc.get("dgs", [])):
        path = f"$.dgs[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{path}: expected an object")
        bus = str(_require(entry, "bus", path))
        did = str(entry.get("id", f"dg.{bus}.{i}"))
        if did in seen_dg_ids:
            raise SchemaError(f"{path}: duplicate dg id {did!r}")
        seen_dg_ids.add(did)
        dgs.append(
            DGUnit(
                id=did,
                bus=bus,
                p_max=_number(entry, "p_max", path),
                p_min=_number(entry, "p_min", path, default=0.0),
                q_max=_number(entry, "q_max", path, default=0.0),
                q_min=_number(entry, "q_min", path, default=0.0),
            )
        )

    mobile_gens: dict[str, MobileGen] = {}
    for i, entry in enumerate(doc.get("mobile_gens", [])):
        path = f"$.mobile_gens[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{path}: expected an object")
        mid = str(_require(entry, "id", path))
        if mid in mobile_gens:
            raise SchemaError(f"{path}: duplicate mobile generator id {mid!r}")
        mobile_gens[mid] = MobileGen(
            id=mid,
            p_max=_number(entry, "p_max", path),
            q_max=_number(entry, "q_max", path, default=0.0),
            home_depot=str(_require(entry, "home_depot", path)),
        )

    depots: dict[str, Depot] = {}
    for i, entry in enumerate(doc.get("depots", [])):
        path = f"$.depots[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{path}: expected an object")
        did = str(_require(entry, "id", path))
        if did in depots:
            raise SchemaError(f"{path}: duplicate depot id {did!r}")
        travel = _require(entry, "travel_minutes", path, dict)
        depots[did] = Depot(
            id=did,
            travel_minutes={str(k): float(v) for k, v in travel.items()},
        )

    # referential integrity before invariant validation
    for ln in lines.values():
        for end in (ln.from_bus, ln.to_bus):
            if end not in buses:
                raise IntegrityError(f"line {ln.id!r} references unknown bus {end!r}")
    for dg in dgs:
        if dg.bus not in buses:
            raise IntegrityError(f"dg {dg.id!r} references unknown bus {dg.bus!r}")
    for mg in mobile_gens.values():
        if mg.home_depot not in depots:
            raise IntegrityError(f"mobile generator {mg.id!r} references unknown depot {mg.home_depot!r}")
    for dp in depots.values():
        for bid in dp.travel_minutes:
            if bid not in buses:
                raise IntegrityError(f"depot {dp.id!r} travel entry references unknown bus {bid!r}")

    net = Network(
        buses=buses,
        lines=lines,
        dgs=tuple(dgs),
        mobile_gens=mobile_gens,
        depots=depots,
        base_mva=base_mva,
        nominal_voltage_pu=nominal_v,
        horizon=horizon,
    )
    report = validate(net)
    if not report.ok:
        raise InvalidNetworkError(report)
    return net


def load_network(path) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_network(fh.read())


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

class _UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb
            return True
        return False


def validate(net: Network) -> ValidationReport:
    """Check every instance invariant; returns a report, never raises."""
    out: list[Violation] = []

    roots = [b.id for b in net.buses.values() if b.is_root]
    if len(roots) != 1:
        out.append(Violation("root", ",".join(roots) or "-",
                             f"expected exactly one root bus, found {len(roots)}"))

    for bus in net.sorted_buses():
        if not bus.v_min < bus.v_max:
            out.append(Violation("voltage-bounds", bus.id,
                                 f"bus {bus.id}: v_min {bus.v_min} must be < v_max {bus.v_max}"))
        if bus.weight < 1.0:
            out.append(Violation("weight", bus.id,
                                 f"bus {bus.id}: weight {bus.weight} must be >= 1"))
        if bus.max_mobile_gens < 0:
            out.append(Violation("mg-slots", bus.id,
                                 f"bus {bus.id}: max_mobile_gens must be >= 0"))
        if len(bus.demand_p) != net.horizon or len(bus.demand_q) != net.horizon:
            out.append(Violation("demand-horizon", bus.id,
                                 f"bus {bus.id}: demand series lengths "
                                 f"({len(bus.demand_p)}, {len(bus.demand_q)}) "
                                 f"must equal horizon {net.horizon}"))
        if np.any(bus.demand_p < 0):
            out.append(Violation("demand-sign", bus.id,
                                 f"bus {bus.id}: active demand must be nonnegative"))

    for ln in net.sorted_lines():
        if ln.from_bus == ln.to_bus:
            out.append(Violation("self-loop", ln.id, f"line {ln.id}: from_bus equals to_bus"))
        for end in (ln.from_bus, ln.to_bus):
            if end not in net.buses:
                out.append(Violation("dangling-bus", ln.id,
                                     f"line {ln.id}: unknown bus {end!r}"))
        if ln.r < 0 or ln.x < 0:
            out.append(Violation("impedance", ln.id, f"line {ln.id}: r and x must be >= 0"))
        if ln.capacity <= 0:
            out.append(Violation("capacity", ln.id, f"line {ln.id}: capacity must be > 0"))
        if ln.length_ft <= 0:
            out.append(Violation("length", ln.id, f"line {ln.id}: length_ft must be > 0"))
        if ln.is_candidate and not ln.switchable:
            out.append(Violation("candidate-switch", ln.id,
                                 f"line {ln.id}: candidate underground lines must be switchable"))

    for dg in net.sorted_dgs():
        if dg.p_min > dg.p_max:
            out.append(Violation("dg-range", dg.id, f"dg {dg.id}: p_min > p_max"))
        if dg.q_min > dg.q_max:
            out.append(Violation("dg-range", dg.id, f"dg {dg.id}: q_min > q_max"))
        if dg.p_min < 0:
            out.append(Violation("dg-range", dg.id, f"dg {dg.id}: p_min must be >= 0"))
        if dg.bus not in net.buses:
            out.append(Violation("dangling-bus", dg.id, f"dg {dg.id}: unknown bus {dg.bus!r}"))

    for mg in net.sorted_mobile_gens():
        if mg.p_max <= 0:
            out.append(Violation("mg-rating", mg.id, f"mobile gen {mg.id}: p_max must be > 0"))
        if mg.q_max < 0:
            out.append(Violation("mg-rating", mg.id, f"mobile gen {mg.id}: q_max must be >= 0"))
        if mg.home_depot not in net.depots:
            out.append(Violation("dangling-depot", mg.id,
                                 f"mobile gen {mg.id}: unknown depot {mg.home_depot!r}"))

    connectable = [b.id for b in net.buses.values() if b.max_mobile_gens > 0]
    for dp in sorted(net.depots):
        depot = net.depots[dp]
        for bid, minutes in sorted(depot.travel_minutes.items()):
            if minutes < 0:
                out.append(Violation("travel-time", dp,
                                     f"depot {dp}: negative travel time to bus {bid}"))
        missing = sorted(set(connectable) - set(depot.travel_minutes))
        if missing:
            out.append(Violation("travel-coverage", dp,
                                 f"depot {dp}: no travel time for connectable buses {missing}"))

    # pre-damage connectivity over existing lines
    valid_buses = set(net.buses)
    if len(roots) == 1 and valid_buses:
        uf = _UnionFind(valid_buses)
        for ln in net.existing_lines():
            if ln.from_bus in valid_buses and ln.to_bus in valid_buses:
                uf.union(ln.from_bus, ln.to_bus)
        root_rep = uf.find(roots[0])
        island = sorted(b for b in valid_buses if uf.find(b) != root_rep)
        if island:
            out.append(Violation("connectivity", ",".join(island),
                                 f"buses not connected to the root over existing lines: {island}"))

    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# Emission (canonical document form)
# ---------------------------------------------------------------------------

def _series_out(series: np.ndarray):
    vals = [float(v) for v in series]
    if len(set(vals)) == 1:
        return vals[0]
    return vals


def emit_network(net: Network) -> str:
    """Serialize to the canonical document form (sorted keys, stable floats).

    ``parse_network(emit_network(net))`` reproduces ``net`` exactly.
    """
    doc = {
        "base_mva": net.base_mva,
        "nominal_voltage_pu": net.nominal_voltage_pu,
        "horizon": net.horizon,
        "buses": [
            {
                "id": b.id,
                "demand_p": _series_out(b.demand_p),
                "demand_q": _series_out(b.demand_q),
                "weight": b.weight,
                "critical": b.critical,
                "v_min": b.v_min,
                "v_max": b.v_max,
                "max_mobile_gens": b.max_mobile_gens,
                "is_root": b.is_root,
            }
            for b in net.sorted_buses()
        ],
        "lines": [
            {
                "id": ln.id,
                "from_bus": ln.from_bus,
                "to_bus": ln.to_bus,
                "r": ln.r,
                "x": ln.x,
                "capacity": ln.capacity,
                "length_ft": ln.length_ft,
                "kind": ln.kind,
                "switchable": ln.switchable,
            }
            for ln in net.sorted_lines()
        ],
        "dgs": [
            {
                "id": d.id,
                "bus": d.bus,
                "p_max": d.p_max,
                "p_min": d.p_min,
                "q_max": d.q_max,
                "q_min": d.q_min,
            }
            for d in net.sorted_dgs()
        ],
        "mobile_gens": [
            {"id": m.id, "p_max": m.p_max, "q_max": m.q_max, "home_depot": m.home_depot}
            for m in net.sorted_mobile_gens()
        ],
        "depots": [
            {"id": d, "travel_minutes": dict(sorted(net.depots[d].travel_minutes.items()))}
            for d in sorted(net.depots)
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def with_mobile_fleet(net: Network, count: int) -> Network:
    """Copy of ``net`` keeping only the first ``count`` mobile generators
    (sorted by id).  Used for fleet-size sweeps."""
    keep = [m.id for m in net.sorted_mobile_gens()][:count]
    return replace(net, mobile_gens={k: net.mobile_gens[k] for k in keep})
