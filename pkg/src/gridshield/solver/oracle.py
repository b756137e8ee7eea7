"""Exhaustive-enumeration oracle for tiny models.

Every assignment of the free binary variables is screened against the
rows that involve binaries only (vectorized), and each surviving
assignment has its continuous restriction solved as a plain LP.  The best
feasible objective is exact up to LP tolerance, which makes this the
independent reference for the branch-and-bound path.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize

from ..milp.model import MilpModel
from .backend import Solution, STATUS_INFEASIBLE, STATUS_OPTIMAL

DEFAULT_MAX_BINARIES = 16
_FEAS_TOL = 1e-7


class OracleSizeError(ValueError):
    """Refused: enumerating this many binaries would run away."""


def brute_force_oracle(model: MilpModel, max_binaries: int = DEFAULT_MAX_BINARIES) -> Solution:
    """Enumerate binary assignments; LP-solve the continuous rest of each.

    Binaries already fixed by their bounds are constants, not enumerated.
    Raises OracleSizeError above ``max_binaries`` free binaries.
    """
    c, a, row_lb, row_ub, var_lb, var_ub, integrality = model.to_arrays()
    a = a.tocsr()

    binary = integrality.astype(bool)
    fixed = var_lb == var_ub
    free_bin = np.flatnonzero(binary & ~fixed)
    fixed_bin = np.flatnonzero(binary & fixed)
    cont = np.flatnonzero(~binary)
    k = len(free_bin)
    if k > max_binaries:
        raise OracleSizeError(
            f"{k} free binaries exceed the enumeration cap of {max_binaries}")

    # fixed binaries are constants everywhere; fixed continuous variables
    # stay in the LP with pinned bounds
    base_x = np.zeros(len(model.index))
    base_x[fixed_bin] = var_lb[fixed_bin]

    m = a.shape[0]
    a_dense_free = a[:, free_bin].toarray() if m else np.zeros((0, k))
    if m and len(fixed_bin):
        shift_fixed = np.asarray(a[:, fixed_bin] @ var_lb[fixed_bin]).ravel()
    else:
        shift_fixed = np.zeros(m)

    # rows touching only binary columns can be screened without an LP
    touches_cont = np.zeros(m, dtype=bool)
    if m and len(cont):
        cols = a[:, cont]
        touches_cont = np.asarray(np.abs(cols).sum(axis=1)).ravel() > 0
    pure = ~touches_cont
    mixed = np.flatnonzero(touches_cont)

    assignments = ((np.arange(2 ** k)[:, None] >> np.arange(k)) & 1).astype(float)

    ok = np.ones(len(assignments), dtype=bool)
    if m and pure.any():
        lhs = assignments @ a_dense_free[pure].T + shift_fixed[pure]
        ok &= np.all(lhs >= row_lb[pure] - _FEAS_TOL, axis=1)
        ok &= np.all(lhs <= row_ub[pure] + _FEAS_TOL, axis=1)

    # continuous sub-LP data (objective over continuous columns only)
    c_cont = c[cont]
    lp_bounds = np.column_stack([var_lb[cont], var_ub[cont]]) if len(cont) else None
    a_mixed_cont = a[mixed][:, cont] if len(mixed) and len(cont) else None
    mixed_lb = row_lb[mixed]
    mixed_ub = row_ub[mixed]
    a_mixed_free = a_dense_free[mixed] if len(mixed) else np.zeros((0, k))
    shift_mixed_fixed = shift_fixed[mixed] if len(mixed) else np.zeros(0)

    best_obj = np.inf
    best_x = None
    c_free = c[free_bin]
    fixed_cost = float(c[fixed_bin] @ var_lb[fixed_bin]) if len(fixed_bin) else 0.0

    for idx in np.flatnonzero(ok):
        b = assignments[idx]
        const_cost = fixed_cost + float(c_free @ b)
        if len(cont) == 0:
            if len(mixed):
                continue  # mixed rows without continuous columns cannot exist
            if const_cost < best_obj - 1e-12:
                best_obj = const_cost
                best_x = (b, np.zeros(0))
            continue
        if len(mixed):
            shift = a_mixed_free @ b + shift_mixed_fixed
            lo = mixed_lb - shift
            hi = mixed_ub - shift
        else:
            lo = hi = np.zeros(0)
        a_eq_rows = np.flatnonzero(np.isfinite(lo) & np.isfinite(hi) & (lo == hi))
        a_ub_rows = []
        b_ub = []
        for i in range(len(lo)):
            if i in a_eq_rows:
                continue
            if np.isfinite(hi[i]):
                a_ub_rows.append((i, 1.0))
                b_ub.append(hi[i])
            if np.isfinite(lo[i]):
                a_ub_rows.append((i, -1.0))
                b_ub.append(-lo[i])
        kwargs = {}
        if len(a_eq_rows):
            kwargs["A_eq"] = a_mixed_cont[a_eq_rows].toarray()
            kwargs["b_eq"] = lo[a_eq_rows]
        if a_ub_rows:
            rows = np.array([a_mixed_cont[i].toarray().ravel() * s for i, s in a_ub_rows])
            kwargs["A_ub"] = rows
            kwargs["b_ub"] = np.array(b_ub)
        res = optimize.linprog(c_cont, bounds=lp_bounds, method="highs", **kwargs)
        if res.status != 0:
            continue
        obj = const_cost + float(res.fun)
        if obj < best_obj - 1e-12:
            best_obj = obj
            best_x = (b, np.array(res.x))

    if best_x is None:
        return Solution(status=STATUS_INFEASIBLE, meta=dict(model.meta))

    b, xc = best_x
    x = np.array(base_x)
    x[free_bin] = b
    x[cont] = xc
    values = {d.key: float(x[i]) for i, d in enumerate(model.index.defs)}
    return Solution(
        status=STATUS_OPTIMAL,
        objective=model.objective_value(x),
        gap=0.0,
        values=values,
        meta=dict(model.meta),
    )
