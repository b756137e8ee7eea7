"""Independent solution verification.

``check_feasibility`` re-evaluates every model row, variable bound, and
binary integrality at a candidate point; it shares no code with any solver
and is the second half of every dual-route check in the test suite.
``verify_radiality`` is a union-find pass over the closed-switch subgraph,
restricted to energized buses (those reachable from an active source).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..milp.model import MilpModel
from ..milp.variables import CONNECTED, DG_ON, SWITCH
from .backend import BINARY_TOL, Solution

DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class RowViolation:
    tag: str
    row: str
    amount: float


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[RowViolation, ...]
    max_violation: float

    @property
    def ok(self) -> bool:
        return not self.violations

    def tags(self) -> set[str]:
        return {v.tag for v in self.violations}


def _values_of(solution) -> dict:
    if isinstance(solution, Solution):
        return solution.values
    return solution


def check_feasibility(model: MilpModel, solution, tol: float = DEFAULT_TOL) -> FeasibilityReport:
    """Re-evaluate every constraint at the candidate point.

    Binaries within 1e-6 of an integer are rounded first; anything farther
    off is reported as an integrality violation.  Raises KeyError when the
    candidate misses a model variable.
    """
    values = _values_of(solution)
    x = model.values_vector(values)
    violations: list[RowViolation] = []

    for i, d in enumerate(model.index.defs):
        if d.binary:
            snapped = round(x[i])
            if abs(x[i] - snapped) <= BINARY_TOL:
                x[i] = snapped
            else:
                violations.append(RowViolation(
                    "integrality", d.name, abs(x[i] - snapped)))
        if x[i] < d.lb - tol:
            violations.append(RowViolation("bounds", d.name, d.lb - x[i]))
        elif x[i] > d.ub + tol:
            violations.append(RowViolation("bounds", d.name, x[i] - d.ub))

    for row in model.constraints:
        amount = row.violation(x)
        if amount > tol:
            violations.append(RowViolation(row.tag, row.name, amount))

    max_violation = max((v.amount for v in violations), default=0.0)
    return FeasibilityReport(tuple(violations), max_violation)


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def add(self, a):
        self.parent.setdefault(a, a)

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def verify_radiality(solution, net, threshold: float = 0.5) -> list[str]:
    """Check that closed switches form a forest over energized buses.

    For every (scenario, period): the buses reachable from an active source
    (a committed DG or a connected mobile generator) through closed lines
    must contain no cycle.  Returns human-readable violation strings, empty
    when radial.
    """
    values = _values_of(solution)
    closed: dict[tuple, list] = {}
    for key, val in values.items():
        if key.kind == SWITCH and val >= threshold:
            closed.setdefault((key.scenario, key.t), []).append(key.entity[0])

    dg_bus = {dg.id: dg.bus for dg in net.dgs}
    problems = []
    for (pi, t), line_ids in sorted(closed.items()):
        sources = set()
        for key, val in values.items():
            if key.scenario != pi or key.t != t or val < threshold:
                continue
            if key.kind == DG_ON:
                sources.add(dg_bus[key.entity[0]])
            elif key.kind == CONNECTED:
                sources.add(key.entity[1])
        uf = _UnionFind()
        for b in net.buses:
            uf.add(b)
        cycle_seen = set()
        for lid in sorted(line_ids):
            ln = net.lines[lid]
            if not uf.union(ln.from_bus, ln.to_bus):
                cycle_seen.add(ln.from_bus)
        if not cycle_seen:
            continue
        # re-canonicalize after all unions: roots shift as components merge
        bad = {uf.find(b) for b in cycle_seen} & {uf.find(b) for b in sources}
        for root in sorted(bad):
            members = sorted(b for b in net.buses if uf.find(b) == root)
            problems.append(
                f"scenario {pi} period {t}: cycle among energized buses {members}")
    return problems
