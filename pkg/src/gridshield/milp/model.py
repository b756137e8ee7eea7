"""Solver-agnostic MILP container: variables, tagged linear rows, objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .variables import VariableIndex

SENSES = ("<=", "=", ">=")


@dataclass(frozen=True)
class Constraint:
    """One linear row: ``terms . x  sense  rhs``.

    ``tag`` names the constraint family ("eq2" .. "eq19b", "damage-coupling");
    ``subject`` records (scenario, period, entity...) for diagnostics.
    """

    name: str
    terms: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    tag: str
    subject: tuple = ()

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"bad sense {self.sense!r}")

    def evaluate(self, x: np.ndarray) -> float:
        return float(sum(c * x[j] for j, c in self.terms))

    def violation(self, x: np.ndarray) -> float:
        """Nonnegative infeasibility amount of this row at ``x``."""
        lhs = self.evaluate(x)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


class MilpModel:
    """Mutable while being built, then treated as read-only."""

    def __init__(self, index: VariableIndex, meta: dict | None = None):
        self.index = index
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}
        self.meta = dict(meta or {})
        self._names: set[str] = set()

    # -- construction -------------------------------------------------

    def add_constraint(self, name, terms, sense, rhs, tag, subject=()):
        name = str(name)
        if name in self._names:
            raise ValueError(f"duplicate row name {name!r}")
        self._names.add(name)
        merged: dict[int, float] = {}
        for col, coef in terms:
            if coef == 0.0:
                continue
            merged[col] = merged.get(col, 0.0) + float(coef)
        row = Constraint(
            name=name,
            terms=tuple(sorted(merged.items())),
            sense=sense,
            rhs=float(rhs),
            tag=str(tag),
            subject=tuple(subject),
        )
        self.constraints.append(row)
        return row

    def add_objective_term(self, col: int, coef: float):
        if coef == 0.0:
            return
        self.objective[col] = self.objective.get(col, 0.0) + float(coef)

    def apply_bounds(self, overrides: dict):
        """Replace bounds of selected variables (key -> (lb, ub)).  Columns
        and rows are untouched, so this is how first-stage decisions get
        pinned for evaluation runs."""
        from dataclasses import replace

        from .variables import VariableIndex

        new_defs = []
        remaining = dict(overrides)
        for d in self.index.defs:
            if d.key in remaining:
                lb, ub = remaining.pop(d.key)
                new_defs.append(replace(d, lb=float(lb), ub=float(ub)))
            else:
                new_defs.append(d)
        if remaining:
            raise KeyError(f"unknown variable keys: {sorted(remaining)[:3]}")
        self.index = VariableIndex(new_defs)

    def fix_variable(self, key, value: float):
        self.apply_bounds({key: (value, value)})

    # -- inspection ---------------------------------------------------

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(len(self.index))
        for col, coef in self.objective.items():
            c[col] = coef
        return c

    def objective_value(self, x: np.ndarray) -> float:
        return float(sum(coef * x[col] for col, coef in sorted(self.objective.items())))

    def rows_by_tag(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for row in self.constraints:
            out[row.tag] = out.get(row.tag, 0) + 1
        return out

    def size_report(self) -> dict:
        """Counts used by the scaling checks: totals plus per-family splits."""
        return {
            "binaries": self.index.n_binary,
            "continuous": self.index.n_continuous,
            "constraints": len(self.constraints),
            "variables_by_kind": self.index.kind_counts(),
            "rows_by_tag": self.rows_by_tag(),
        }

    # -- solver interface ----------------------------------------------

    def to_arrays(self):
        """(c, A, row_lb, row_ub, var_lb, var_ub, integrality) for HiGHS."""
        n = len(self.index)
        m = len(self.constraints)
        c = self.objective_vector()
        data, rows, cols = [], [], []
        row_lb = np.full(m, -np.inf)
        row_ub = np.full(m, np.inf)
        for i, row in enumerate(self.constraints):
            for col, coef in row.terms:
                rows.append(i)
                cols.append(col)
                data.append(coef)
            if row.sense in ("=", ">="):
                row_lb[i] = row.rhs
            if row.sense in ("=", "<="):
                row_ub[i] = row.rhs
        a = sparse.csr_matrix((data, (rows, cols)), shape=(m, n))
        var_lb = np.array([d.lb for d in self.index.defs])
        var_ub = np.array([d.ub for d in self.index.defs])
        integrality = np.array([1 if d.binary else 0 for d in self.index.defs])
        return c, a, row_lb, row_ub, var_lb, var_ub, integrality

    def values_vector(self, values: dict) -> np.ndarray:
        """Dense vector from a key->value map; raises on missing keys."""
        x = np.zeros(len(self.index))
        for i, d in enumerate(self.index.defs):
            if d.key not in values:
                raise KeyError(f"solution is missing variable {d.name}")
            x[i] = values[d.key]
        return x
