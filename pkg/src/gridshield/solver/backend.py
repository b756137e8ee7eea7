"""Solver adapters and the solution container.

Two ways to solve a model: in-process through HiGHS (scipy.optimize.milp),
or out-of-process through any solver wrapped by a command template with
``{model_path} {solution_path} {gap} {timeout}`` placeholders.  The default
template comes from the ``GRIDSHIELD_SOLVER_CMD`` environment variable;
without it the in-process backend is used.

Solution files exchanged with external adapters are plain text::

    status optimal
    objective 12.5
    gap 0.0
    solve_seconds 0.04
    var <name> <value>        (one line per variable)
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from ..milp.model import MilpModel
from .emit import emit_model

SOLVER_CMD_ENV = "GRIDSHIELD_SOLVER_CMD"
BINARY_TOL = 1e-6

STATUS_OPTIMAL = "optimal"
STATUS_GAP = "gap-feasible"
STATUS_INFEASIBLE = "infeasible"
STATUS_TIMEOUT = "timeout"
STATUS_UNBOUNDED = "unbounded"


class BackendError(RuntimeError):
    """Solver backend missing, crashed, or returned garbage."""


@dataclass
class Solution:
    """Values for every model variable plus solve metadata.

    ``values`` maps VariableKey -> float with binaries already snapped to
    exact 0/1; ``objective`` is recomputed from the returned point so it is
    always consistent with ``values``.
    """

    status: str
    objective: float | None = None
    gap: float | None = None
    values: dict = field(default_factory=dict)
    solve_seconds: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status in (STATUS_OPTIMAL, STATUS_GAP)

    def value(self, kind, scenario=None, t=None, entity=()) -> float:
        from ..milp.variables import VariableKey

        return self.values[VariableKey(kind, scenario, t, tuple(entity))]

    def get(self, kind, scenario=None, t=None, entity=(), default=0.0) -> float:
        from ..milp.variables import VariableKey

        return self.values.get(VariableKey(kind, scenario, t, tuple(entity)), default)


def _package_solution(model: MilpModel, x: np.ndarray, status: str,
                      gap: float | None, seconds: float) -> Solution:
    x = np.array(x, dtype=float)
    for i, d in enumerate(model.index.defs):
        if d.binary:
            snapped = round(x[i])
            # within tolerance -> exact; larger deviations are left for the
            # feasibility checker to flag as integrality violations
            if abs(x[i] - snapped) <= BINARY_TOL:
                x[i] = snapped
    values = {d.key: float(x[i]) for i, d in enumerate(model.index.defs)}
    return Solution(
        status=status,
        objective=model.objective_value(x),
        gap=gap,
        values=values,
        solve_seconds=seconds,
        meta=dict(model.meta),
    )


class HighsBackend:
    """In-process MILP solve via scipy's HiGHS interface."""

    name = "highs"

    def solve(self, model: MilpModel, gap: float = 0.0,
              time_limit: float | None = None) -> Solution:
        c, a, row_lb, row_ub, var_lb, var_ub, integrality = model.to_arrays()
        options = {"mip_rel_gap": float(gap)}
        if time_limit is not None:
            options["time_limit"] = float(time_limit)
        constraints = None
        if a.shape[0]:
            constraints = optimize.LinearConstraint(a, row_lb, row_ub)
        start = time.perf_counter()
        res = optimize.milp(
            c,
            constraints=constraints,
            integrality=integrality,
            bounds=optimize.Bounds(var_lb, var_ub),
            options=options,
        )
        seconds = time.perf_counter() - start
        if res.status == 2:
            return Solution(status=STATUS_INFEASIBLE, solve_seconds=seconds,
                            meta=dict(model.meta))
        if res.status == 3:
            return Solution(status=STATUS_UNBOUNDED, solve_seconds=seconds,
                            meta=dict(model.meta))
        if res.x is None:
            return Solution(status=STATUS_TIMEOUT, solve_seconds=seconds,
                            meta=dict(model.meta))
        reported_gap = getattr(res, "mip_gap", None)
        if reported_gap is None:
            reported_gap = 0.0
        if res.status == 1:
            status = STATUS_TIMEOUT
        elif reported_gap <= 1e-9:
            status = STATUS_OPTIMAL
        else:
            status = STATUS_GAP
        return _package_solution(model, res.x, status, float(reported_gap), seconds)


class CommandBackend:
    """Process/file adapter: write model, run command, read solution.

    The template is tokenized first and placeholders substituted per token,
    so paths with spaces cannot break the command line.
    """

    def __init__(self, template: str, file_format: str = "lp"):
        if not template or not template.strip():
            raise BackendError("empty solver command template")
        self.template = template
        self.file_format = file_format

    @property
    def name(self) -> str:
        return f"command({self.template})"

    def solve(self, model: MilpModel, gap: float = 0.0,
              time_limit: float | None = None) -> Solution:
        timeout = time_limit if time_limit is not None else 0
        with tempfile.TemporaryDirectory(prefix="gridshield-") as tmp:
            model_path = Path(tmp) / f"model.{self.file_format}"
            solution_path = Path(tmp) / "solution.sol"
            model_path.write_text(emit_model(model, self.file_format), encoding="utf-8")
            argv = [
                tok.format(model_path=str(model_path),
                           solution_path=str(solution_path),
                           gap=gap, timeout=timeout)
                for tok in shlex.split(self.template)
            ]
            start = time.perf_counter()
            try:
                proc = subprocess.run(
                    argv, capture_output=True, text=True,
                    timeout=time_limit if time_limit else None,
                )
            except FileNotFoundError as exc:
                raise BackendError(f"solver command not found: {argv[0]!r}") from exc
            except subprocess.TimeoutExpired:
                return Solution(status=STATUS_TIMEOUT,
                                solve_seconds=time.perf_counter() - start,
                                meta=dict(model.meta))
            seconds = time.perf_counter() - start
            if proc.returncode != 0:
                raise BackendError(
                    f"solver command failed with code {proc.returncode}: "
                    f"{proc.stderr.strip()[:500]}")
            if not solution_path.exists():
                raise BackendError("solver command wrote no solution file")
            sol = parse_solution(solution_path.read_text(encoding="utf-8"), model)
            sol.solve_seconds = seconds
            return sol


def emit_solution(sol: Solution, model: MilpModel) -> str:
    """Serialize in the documented adapter exchange format.

    Deliberately carries no timing information so identical solves produce
    identical bytes.
    """
    out = [f"status {sol.status}"]
    out.append(f"objective {'' if sol.objective is None else repr(sol.objective)}".rstrip())
    out.append(f"gap {'' if sol.gap is None else repr(sol.gap)}".rstrip())
    for d in model.index.defs:
        if d.key in sol.values:
            out.append(f"var {d.name} {sol.values[d.key]!r}")
    return "\n".join(out) + "\n"


def parse_solution(text: str, model: MilpModel) -> Solution:
    """Read a solution file back, re-keying variables through the model."""
    status = None
    objective = None
    gap = None
    seconds = 0.0
    raw: dict[str, float] = {}
    for ln in text.splitlines():
        parts = ln.split()
        if not parts:
            continue
        if parts[0] == "status":
            status = parts[1]
        elif parts[0] == "objective" and len(parts) > 1:
            objective = float(parts[1])
        elif parts[0] == "gap" and len(parts) > 1:
            gap = float(parts[1])
        elif parts[0] == "solve_seconds" and len(parts) > 1:
            seconds = float(parts[1])
        elif parts[0] == "var":
            raw[parts[1]] = float(parts[2])
    if status is None:
        raise BackendError("solution file has no status line")
    if status in (STATUS_INFEASIBLE, STATUS_UNBOUNDED, STATUS_TIMEOUT) and not raw:
        return Solution(status=status, solve_seconds=seconds, meta=dict(model.meta))
    x = np.zeros(len(model.index))
    seen = set()
    for name, value in raw.items():
        try:
            col = model.index.col_by_name(name)
        except KeyError:
            raise BackendError(f"solution names unknown variable {name!r}")
        x[col] = value
        seen.add(col)
    missing = [d.name for i, d in enumerate(model.index.defs) if i not in seen]
    if missing:
        raise BackendError(
            f"solution file is missing {len(missing)} variables "
            f"(first: {missing[:3]})")
    sol = _package_solution(model, x, status, gap, seconds)
    if objective is not None and sol.objective is not None:
        rel = abs(objective - sol.objective) / max(1.0, abs(objective))
        if rel > 1e-6:
            sol.meta["reported_objective"] = objective
    return sol


def default_backend():
    template = os.environ.get(SOLVER_CMD_ENV, "").strip()
    if template:
        return CommandBackend(template)
    return HighsBackend()


def solve(model: MilpModel, cfg=None, backend=None, gap: float | None = None,
          time_limit: float | None = None) -> Solution:
    """Solve with the configured backend.

    Gap priority: explicit ``gap`` argument, then ``cfg.optimality_gap``,
    then 0.  Never fabricates values: non-feasible statuses carry none.
    """
    if backend is None:
        backend = default_backend()
    if gap is None:
        gap = cfg.optimality_gap if cfg is not None else 0.0
    if time_limit is None and cfg is not None:
        time_limit = cfg.time_limit_seconds
    return backend.solve(model, gap=gap, time_limit=time_limit)
