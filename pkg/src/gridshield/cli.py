"""Command-line pipeline: scenarios -> plan -> restore -> report -> check.

Every command writes its primary outputs plus a ``manifest.json`` capturing
the resolved configuration, seeds, and content hashes of all inputs and
outputs, so a run can be reproduced byte-for-byte from the manifest alone
(wall-clock timings excepted).

Exit codes: 0 success, 1 infeasible/violations, 2 input error,
3 solver-backend error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .milp.build import build_model, compute_investment_cost
from .milp.config import PlanningConfig, parse_config
from .milp.variables import ARRIVE, BUILD, DISPATCH
from .network import NetworkError, load_network
from .report import aggregate_trajectory, emit_report, trajectory, utilization_rates
from .scenarios import (
    FragilityCurve,
    emit_scenarios,
    load_scenarios,
    monte_carlo,
    reduce_scenarios,
)
from .solver.backend import (
    BackendError,
    CommandBackend,
    SOLVER_CMD_ENV,
    default_backend,
    emit_solution,
    parse_solution,
    solve,
)
from .solver.check import check_feasibility
from .solver.emit import emit_model, parse_model

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT = 2
EXIT_BACKEND = 3


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class RunManifest:
    """Provenance record for one command invocation."""

    def __init__(self, command: str, argv, config: dict | None, seed=None):
        self.command = command
        self.argv = list(argv)
        self.config = config
        self.seed = seed
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self.timings: dict[str, float] = {}
        self._start = time.perf_counter()

    def add_input(self, path):
        p = Path(path)
        self.inputs[str(p)] = _sha256(p)

    def add_output(self, path):
        p = Path(path)
        self.outputs[str(p)] = _sha256(p)

    def time(self, label: str, seconds: float):
        self.timings[label] = seconds

    def write(self, out_dir):
        self.timings["total"] = time.perf_counter() - self._start
        doc = {
            "tool": "gridshield",
            "version": __version__,
            "command": self.command,
            "argv": self.argv,
            "seed": self.seed,
            "config": self.config,
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": dict(sorted(self.outputs.items())),
            "timings": self.timings,
        }
        path = Path(out_dir) / "manifest.json"
        _write_atomic(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path


def _resolve_config(args) -> PlanningConfig:
    doc = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    cfg = parse_config(doc)
    overrides = {}
    for flag, field_name in (
        ("budget", "budget"),
        ("max_underground", "max_underground"),
        ("gap", "optimality_gap"),
        ("dt_minutes", "dt_minutes"),
        ("time_limit", "time_limit_seconds"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            overrides[field_name] = val
    if overrides:
        cfg = cfg.override(**overrides)
    return cfg, ("horizon_periods" in doc)


def _sync_horizon(cfg: PlanningConfig, net, explicit: bool) -> PlanningConfig:
    if not explicit and cfg.horizon_periods != net.horizon:
        cfg = cfg.override(horizon_periods=net.horizon)
    return cfg


def _backend(args):
    template = getattr(args, "solver_cmd", None) or os.environ.get(SOLVER_CMD_ENV, "").strip()
    if template:
        return CommandBackend(template)
    return default_backend()


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_scenarios(args) -> int:
    net = load_network(args.network)
    curve = FragilityCurve(
        intensity_50=args.intensity_50,
        steepness=args.steepness,
        underground_multiplier=args.underground_multiplier,
    )
    manifest = RunManifest("scenarios", args.argv, None, seed=args.seed)
    manifest.add_input(args.network)
    t0 = time.perf_counter()
    full = monte_carlo(net, curve, args.intensity, args.n, args.seed)
    reduced = reduce_scenarios(full, args.k, net) if args.k < args.n else full
    manifest.time("sampling", time.perf_counter() - t0)
    out_dir = Path(args.out_dir)
    scen_path = out_dir / "scenarios.json"
    _write_atomic(scen_path, emit_scenarios(reduced))
    manifest.add_output(scen_path)
    manifest.write(out_dir)
    print(f"wrote {scen_path} ({len(reduced)} scenarios from {args.n} samples)")
    return EXIT_OK


def _solve_and_dump(model, cfg, backend, out_dir, manifest):
    model_path = Path(out_dir) / "model.lp"
    _write_atomic(model_path, emit_model(model, "lp"))
    manifest.add_output(model_path)
    t0 = time.perf_counter()
    sol = solve(model, cfg, backend=backend)
    manifest.time("solve", time.perf_counter() - t0)
    if sol.feasible:
        sol_path = Path(out_dir) / "solution.sol"
        _write_atomic(sol_path, emit_solution(sol, model))
        manifest.add_output(sol_path)
    return sol


def cmd_plan(args) -> int:
    net = load_network(args.network)
    scen = load_scenarios(args.scenarios, net)
    cfg, explicit = _resolve_config(args)
    cfg = _sync_horizon(cfg, net, explicit)
    manifest = RunManifest("plan", args.argv, cfg.to_dict())
    manifest.add_input(args.network)
    manifest.add_input(args.scenarios)
    model = build_model(net, scen, cfg)
    sol = _solve_and_dump(model, cfg, _backend(args), args.out_dir, manifest)
    if not sol.feasible:
        print(f"planning model is {sol.status}", file=sys.stderr)
        manifest.write(args.out_dir)
        return EXIT_INFEASIBLE
    chosen = [ln for ln in net.candidate_lines()
              if sol.get(BUILD, None, None, (ln.id,)) >= 0.5]
    plan_doc = {
        "lines": [ln.id for ln in chosen],
        "total_length_ft": sum(ln.length_ft for ln in chosen),
        "cost_usd": compute_investment_cost(chosen, cfg),
        "objective_weighted_unserved_kwh": sol.objective,
        "gap": sol.gap,
        "status": sol.status,
    }
    plan_path = Path(args.out_dir) / "plan.json"
    _write_atomic(plan_path, json.dumps(plan_doc, indent=2, sort_keys=True) + "\n")
    manifest.add_output(plan_path)
    manifest.write(args.out_dir)
    print(f"plan: {len(chosen)} lines, cost ${plan_doc['cost_usd']:,.2f}, "
          f"objective {sol.objective:.6g} weighted-kWh unserved ({sol.status})")
    return EXIT_OK


def _dispatch_table(sol, net) -> list[dict]:
    rows = []
    sid = sol.meta["scenario_ids"][0]
    dt = float(sol.meta["dt_minutes"])
    horizon = int(sol.meta["horizon"])
    for mg in net.sorted_mobile_gens():
        for b in net.connectable_buses():
            if sol.get(DISPATCH, sid, None, (mg.home_depot, mg.id, b.id)) >= 0.5:
                steps = [t for t in range(1, horizon + 1)
                         if sol.get(ARRIVE, sid, t, (mg.id, b.id)) >= 0.5]
                rows.append({
                    "mg": mg.id,
                    "bus": b.id,
                    "arrival_minutes": steps[0] * dt if steps else None,
                })
    return rows


def cmd_restore(args) -> int:
    net = load_network(args.network)
    scen_set = load_scenarios(args.scenarios, net)
    with open(args.plan, "r", encoding="utf-8") as fh:
        plan_doc = json.load(fh)
    plan_lines = set(plan_doc["lines"])
    candidate_ids = {ln.id for ln in net.candidate_lines()}
    if not plan_lines <= candidate_ids:
        raise NetworkError(
            f"plan names lines that are not candidates: {sorted(plan_lines - candidate_ids)}")
    if args.scenario_id:
        scenario = scen_set.by_id(args.scenario_id)
    elif len(scen_set) == 1:
        scenario = scen_set.scenarios[0]
    else:
        raise NetworkError("several scenarios in file; pass --scenario-id")
    scenario = replace(scenario, probability=1.0)

    cfg, explicit = _resolve_config(args)
    cfg = _sync_horizon(cfg, net, explicit)
    manifest = RunManifest("restore", args.argv, cfg.to_dict())
    for p in (args.network, args.scenarios, args.plan):
        manifest.add_input(p)
    model = build_model(net, [scenario], cfg, plan=plan_lines)
    sol = _solve_and_dump(model, cfg, _backend(args), args.out_dir, manifest)
    if not sol.feasible:
        print(f"restoration model is {sol.status}", file=sys.stderr)
        manifest.write(args.out_dir)
        return EXIT_INFEASIBLE

    traj = trajectory(sol, net, scenario)
    traj_path = Path(args.out_dir) / "trajectory.csv"
    _write_atomic(traj_path, emit_report(traj, "csv"))
    manifest.add_output(traj_path)
    dispatch = _dispatch_table(sol, net)
    dispatch_lines = ["mg,bus,arrival_minutes"]
    for row in dispatch:
        dispatch_lines.append(f"{row['mg']},{row['bus']},{row['arrival_minutes']!r}")
    dispatch_path = Path(args.out_dir) / "dispatch.csv"
    _write_atomic(dispatch_path, "\n".join(dispatch_lines) + "\n")
    manifest.add_output(dispatch_path)
    manifest.write(args.out_dir)
    print(f"restore: served fraction reaches {traj.served_fraction[-1]:.4f} "
          f"({len(dispatch)} mobile generators dispatched)")
    return EXIT_OK


def cmd_report(args) -> int:
    net = load_network(args.network)
    scen_set = load_scenarios(args.scenarios, net)
    cfg, explicit = _resolve_config(args)
    cfg = _sync_horizon(cfg, net, explicit)
    manifest = RunManifest("report", args.argv, cfg.to_dict())
    for p in (args.network, args.scenarios, args.solution):
        manifest.add_input(p)

    if args.scenario_id:
        scens = [replace(scen_set.by_id(args.scenario_id), probability=1.0)]
    else:
        scens = list(scen_set.scenarios)
    model = build_model(net, scens, cfg)
    with open(args.solution, "r", encoding="utf-8") as fh:
        sol = parse_solution(fh.read(), model)
    if len(scens) == 1:
        traj = trajectory(sol, net, scens[0])
    else:
        traj = aggregate_trajectory(sol, net, scens)
    out_dir = Path(args.out_dir)
    traj_path = out_dir / "trajectory.csv"
    _write_atomic(traj_path, emit_report(traj, "csv"))
    manifest.add_output(traj_path)
    rates, fleet = utilization_rates(sol, net, scens[0]) if len(scens) == 1 else ({}, None)
    util_lines = ["mg,utilization"]
    for mid in sorted(rates):
        util_lines.append(f"{mid},{'' if rates[mid] is None else repr(rates[mid])}")
    if fleet is not None:
        util_lines.append(f"fleet,{fleet!r}")
    util_path = out_dir / "utilization.csv"
    _write_atomic(util_path, "\n".join(util_lines) + "\n")
    manifest.add_output(util_path)
    manifest.write(out_dir)
    print(f"report: wrote {traj_path} and {util_path}")
    return EXIT_OK


def cmd_check(args) -> int:
    model = parse_model(Path(args.model).read_text(encoding="utf-8"))
    try:
        sol = parse_solution(Path(args.solution).read_text(encoding="utf-8"), model)
    except BackendError as exc:
        # a user-supplied solution file that cannot be checked is bad input
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = check_feasibility(model, sol, tol=args.tol)
    if report.ok:
        print(f"OK: all {len(model.constraints)} rows satisfied at tol {args.tol}")
        return EXIT_OK
    for v in report.violations[:50]:
        print(f"VIOLATION {v.tag} {v.row}: {v.amount:.3e}")
    print(f"{len(report.violations)} violations, max {report.max_violation:.3e}")
    return EXIT_INFEASIBLE


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridshield",
        description="Resilience planning: underground-line investment and "
                    "mobile-generator dispatch for distribution systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenarios_input=True):
        p.add_argument("--network", required=True, help="network instance JSON")
        if scenarios_input:
            p.add_argument("--scenarios", required=True, help="scenario file JSON")
        p.add_argument("--config", help="PlanningConfig JSON file")
        p.add_argument("--budget", type=float, default=None)
        p.add_argument("--max-underground", dest="max_underground", type=int, default=None)
        p.add_argument("--gap", type=float, default=None)
        p.add_argument("--dt-minutes", dest="dt_minutes", type=float, default=None)
        p.add_argument("--time-limit", dest="time_limit", type=float, default=None)
        p.add_argument("--solver-cmd", dest="solver_cmd", default=None,
                       help=f"command template (default: ${SOLVER_CMD_ENV})")
        p.add_argument("--out-dir", dest="out_dir", default=".")

    p = sub.add_parser("scenarios", help="sample and reduce damage scenarios")
    p.add_argument("--network", required=True)
    p.add_argument("--intensity", type=float, required=True, help="hazard intensity")
    p.add_argument("--intensity-50", dest="intensity_50", type=float, required=True)
    p.add_argument("--steepness", type=float, required=True)
    p.add_argument("--underground-multiplier", dest="underground_multiplier",
                   type=float, default=0.0)
    p.add_argument("--n", type=int, required=True, help="Monte Carlo sample count")
    p.add_argument("--k", type=int, required=True, help="reduced scenario count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", dest="out_dir", default=".")
    p.set_defaults(func=cmd_scenarios)

    p = sub.add_parser("plan", help="solve the two-stage investment model")
    common(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("restore", help="fixed-plan single-scenario restoration")
    common(p)
    p.add_argument("--plan", required=True, help="plan.json from the plan command")
    p.add_argument("--scenario-id", dest="scenario_id", default=None)
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("report", help="recompute metrics from a stored solution")
    common(p)
    p.add_argument("--solution", required=True, help="solution.sol file")
    p.add_argument("--scenario-id", dest="scenario_id", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("check", help="verify a solution file against a model dump")
    p.add_argument("--model", required=True, help="emitted model file (lp or mps)")
    p.add_argument("--solution", required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except (NetworkError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
