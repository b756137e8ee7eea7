import sys

import pytest

import gridshield as gs
from gridshield.milp.model import MilpModel
from gridshield.milp.variables import (
    CURTAIL_P,
    DG_ON,
    PARENT,
    SWITCH,
    VarDef,
    VariableIndex,
    VariableKey,
)
from gridshield.solver.backend import (
    BackendError,
    CommandBackend,
    HighsBackend,
    SOLVER_CMD_ENV,
    emit_solution,
    parse_solution,
    solve,
)
from gridshield.solver.check import check_feasibility, verify_radiality
from gridshield.solver.emit import (
    NameLengthError,
    emit_model,
    model_signature,
    parse_model,
)
from gridshield.solver.oracle import OracleSizeError, brute_force_oracle
from instances import path3_net, scenario_for, triangle_net, two_bus_net


def toy_model(names=("x", "y"), binary=(), bounds=None, rows=(), objective=()):
    defs = []
    for i, name in enumerate(names):
        lb, ub = (bounds or {}).get(name, (0.0, 10.0))
        defs.append(VarDef(VariableKey("parsed", None, None, (name,)),
                           name, lb, ub, name in binary))
    m = MilpModel(VariableIndex(defs))
    cols = {name: i for i, name in enumerate(names)}
    for name, terms, sense, rhs in rows:
        m.add_constraint(name, [(cols[v], c) for v, c in terms], sense, rhs,
                         name.split(".")[0])
    for v, c in objective:
        m.add_objective_term(cols[v], c)
    return m


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def test_emit_single_row_has_two_nonzeros():
    m = toy_model(rows=[("r1", [("x", 1.0), ("y", 1.0)], "<=", 1.0)],
                  objective=[("x", 1.0)])
    text = emit_model(m, "lp")
    (row_line,) = [ln for ln in text.splitlines() if ln.strip().startswith("r1:")]
    assert row_line.count("+ 1.0") == 2


def test_emit_deterministic_and_injective():
    m1 = toy_model(rows=[("r1", [("x", 1.0), ("y", 2.0)], "<=", 1.0)],
                   objective=[("x", 1.0)])
    m2 = toy_model(rows=[("r1", [("x", 1.0), ("y", 2.0)], "<=", 1.0)],
                   objective=[("x", 1.0)])
    assert emit_model(m1, "lp") == emit_model(m2, "lp")
    m3 = toy_model(rows=[("r1", [("x", 1.0), ("y", 2.0000001)], "<=", 1.0)],
                   objective=[("x", 1.0)])
    assert emit_model(m1, "lp") != emit_model(m3, "lp")


def test_emit_binary_markers():
    m = toy_model(binary={"y"}, bounds={"y": (0.0, 1.0)},
                  rows=[("r1", [("x", 1.0), ("y", 1.0)], "<=", 1.0)],
                  objective=[("x", 1.0)])
    lp = emit_model(m, "lp")
    assert "Binaries" in lp and "\n y" in lp
    mps = emit_model(m, "mps")
    assert "'INTORG'" in mps and "'INTEND'" in mps
    assert " BV BND" in mps


def test_mps_name_overflow_suggests_lp():
    m = toy_model(names=("averylongvariablename",),
                  rows=[("r1", [("averylongvariablename", 1.0)], "<=", 1.0)],
                  objective=[("averylongvariablename", 1.0)])
    with pytest.raises(NameLengthError, match="lp-text"):
        emit_model(m, "mps")


@pytest.mark.parametrize("fmt", ["lp", "mps"])
def test_round_trip_recovers_model(fmt):
    m = toy_model(
        names=("x", "y", "z"),
        binary={"z"},
        bounds={"x": (-2.0, 5.0), "y": (0.0, 3.5), "z": (0.0, 1.0)},
        rows=[
            ("r1", [("x", 1.0), ("y", -2.5)], "<=", 4.0),
            ("r2", [("y", 1.0), ("z", 3.0)], ">=", -1.0),
            ("r3", [("x", 1.0), ("z", -1.0)], "=", 0.25),
        ],
        objective=[("x", 1.5), ("z", -1e-06)],
    )
    text = emit_model(m, fmt)
    back = parse_model(text)
    assert model_signature(back) == model_signature(m)
    assert emit_model(back, fmt) == text


def test_round_trip_full_instance_lp():
    net = two_bus_net()
    m = gs.build_model(net, [scenario_for(net)], gs.PlanningConfig(horizon_periods=1))
    text = emit_model(m, "lp")
    assert model_signature(parse_model(text)) == model_signature(m)


# ---------------------------------------------------------------------------
# in-process backend
# ---------------------------------------------------------------------------

def test_solve_simple_lower_bound():
    m = toy_model(names=("x",), bounds={"x": (0.0, 10.0)},
                  rows=[("r1", [("x", 1.0)], ">=", 3.0)],
                  objective=[("x", 1.0)])
    sol = HighsBackend().solve(m)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(3.0)


def test_solve_detects_infeasible():
    m = toy_model(names=("x",), bounds={"x": (0.0, 10.0)},
                  rows=[("r1", [("x", 1.0)], "<=", 0.0),
                        ("r2", [("x", 1.0)], ">=", 1.0)],
                  objective=[("x", 1.0)])
    sol = HighsBackend().solve(m)
    assert sol.status == "infeasible"
    assert sol.objective is None and sol.values == {}


def test_solution_objective_consistent_with_values():
    net = two_bus_net()
    cfg = gs.PlanningConfig(horizon_periods=1)
    m = gs.build_model(net, [scenario_for(net, damaged={"l1"})], cfg)
    sol = solve(m, cfg, gap=0.0)
    x = m.values_vector(sol.values)
    assert sol.objective == pytest.approx(m.objective_value(x), rel=1e-12)


# ---------------------------------------------------------------------------
# solution files and the command backend
# ---------------------------------------------------------------------------

def test_solution_file_round_trip():
    net = two_bus_net()
    cfg = gs.PlanningConfig(horizon_periods=1)
    m = gs.build_model(net, [scenario_for(net)], cfg)
    sol = solve(m, cfg, gap=0.0)
    text = emit_solution(sol, m)
    back = parse_solution(text, m)
    assert back.values == sol.values
    assert back.objective == pytest.approx(sol.objective)


def test_solution_file_missing_variable_is_error():
    net = two_bus_net()
    cfg = gs.PlanningConfig(horizon_periods=1)
    m = gs.build_model(net, [scenario_for(net)], cfg)
    sol = solve(m, cfg, gap=0.0)
    lines = emit_solution(sol, m).splitlines()
    clipped = "\n".join(ln for ln in lines if not ln.startswith("var lcP"))
    with pytest.raises(BackendError, match="missing"):
        parse_solution(clipped, m)


def test_solution_file_unknown_variable_is_error():
    net = two_bus_net()
    cfg = gs.PlanningConfig(horizon_periods=1)
    m = gs.build_model(net, [scenario_for(net)], cfg)
    sol = solve(m, cfg, gap=0.0)
    text = emit_solution(sol, m) + "var bogus 1.0\n"
    with pytest.raises(BackendError, match="bogus"):
        parse_solution(text, m)


def reference_adapter_template() -> str:
    return (f"{sys.executable} -m gridshield.solver.solve_file "
            "{model_path} {solution_path} --gap {gap}")


def test_command_backend_round_trip():
    net = two_bus_net()
    cfg = gs.PlanningConfig(horizon_periods=1)
    m = gs.build_model(net, [scenario_for(net, damaged={"l1"})], cfg)
    direct = HighsBackend().solve(m, gap=0.0)
    via_files = CommandBackend(reference_adapter_template()).solve(m, gap=0.0)
    assert via_files.status == direct.status
    assert via_files.objective == pytest.approx(direct.objective, rel=1e-9)


def test_command_backend_env_default(monkeypatch):
    monkeypatch.setenv(SOLVER_CMD_ENV, reference_adapter_template())
    net = two_bus_net()
    cfg = gs.PlanningConfig(horizon_periods=1)
    m = gs.build_model(net, [scenario_for(net)], cfg)
    sol = solve(m, cfg, gap=0.0)
    assert sol.status == "optimal"


def test_command_backend_missing_binary():
    backend = CommandBackend("definitely-not-a-solver {model_path} {solution_path}")
    net = two_bus_net()
    cfg = gs.PlanningConfig(horizon_periods=1)
    m = gs.build_model(net, [scenario_for(net)], cfg)
    with pytest.raises(BackendError, match="not found"):
        backend.solve(m)


def test_command_backend_rejects_empty_template():
    with pytest.raises(BackendError):
        CommandBackend("   ")


# ---------------------------------------------------------------------------
# feasibility checking
# ---------------------------------------------------------------------------

def test_check_feasibility_clean_solution():
    net = path3_net()
    cfg = gs.PlanningConfig(horizon_periods=1)
    m = gs.build_model(net, [scenario_for(net)], cfg)
    sol = solve(m, cfg, gap=0.0)
    assert check_feasibility(m, sol).ok


def test_check_flags_overcurtailment():
    net = two_bus_net()
    cfg = gs.PlanningConfig(horizon_periods=1)
    m = gs.build_model(net, [scenario_for(net)], cfg)
    sol = solve(m, cfg, gap=0.0)
    values = dict(sol.values)
    key = VariableKey(CURTAIL_P, "s0", 1, ("b2",))
    values[key] = values[key] + 0.2  # exceeds the demand cap
    report = check_feasibility(m, values)
    assert not report.ok
    assert "eq3a" in report.tags()


def test_check_flags_double_parent():
    net = path3_net()
    cfg = gs.PlanningConfig(horizon_periods=1)
    m = gs.build_model(net, [scenario_for(net)], cfg)
    sol = solve(m, cfg, gap=0.0)
    values = dict(sol.values)
    values[VariableKey(PARENT, "s0", 1, ("l1", "b2"))] = 1.0
    values[VariableKey(PARENT, "s0", 1, ("l2", "b2"))] = 1.0
    report = check_feasibility(m, values)
    assert any(tag.startswith("eq7") for tag in report.tags())


def test_check_flags_integrality():
    net = two_bus_net()
    cfg = gs.PlanningConfig(horizon_periods=1)
    m = gs.build_model(net, [scenario_for(net)], cfg)
    sol = solve(m, cfg, gap=0.0)
    values = dict(sol.values)
    values[VariableKey(SWITCH, "s0", 1, ("l1",))] = 0.4
    report = check_feasibility(m, values)
    assert "integrality" in report.tags()


def test_check_missing_variable_raises():
    net = two_bus_net()
    cfg = gs.PlanningConfig(horizon_periods=1)
    m = gs.build_model(net, [scenario_for(net)], cfg)
    sol = solve(m, cfg, gap=0.0)
    values = dict(sol.values)
    values.pop(VariableKey(SWITCH, "s0", 1, ("l1",)))
    with pytest.raises(KeyError):
        check_feasibility(m, values)


def test_verify_radiality_catches_energized_cycle():
    net = triangle_net()
    values = {
        VariableKey(SWITCH, "s0", 1, (l,)): 1.0 for l in ("l1", "l2", "l3")
    }
    values[VariableKey(DG_ON, "s0", 1, ("sub",))] = 1.0
    problems = verify_radiality(values, net)
    assert len(problems) == 1 and "cycle" in problems[0]
    # de-energized cycle is tolerated (nothing feeds it)
    values[VariableKey(DG_ON, "s0", 1, ("sub",))] = 0.0
    assert verify_radiality(values, net) == []


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def test_oracle_matches_lp_when_no_binaries():
    m = toy_model(names=("x", "y"), bounds={"x": (0.0, 4.0), "y": (0.0, 4.0)},
                  rows=[("r1", [("x", 1.0), ("y", 1.0)], ">=", 3.0)],
                  objective=[("x", 2.0), ("y", 3.0)])
    direct = HighsBackend().solve(m)
    oracle = brute_force_oracle(m)
    assert oracle.objective == pytest.approx(direct.objective, abs=1e-9)


def test_oracle_one_binary_gate():
    # y may serve 100 units only if the binary gate is open; serving is cheaper
    m = toy_model(
        names=("y", "g"), binary={"g"},
        bounds={"y": (0.0, 100.0), "g": (0.0, 1.0)},
        rows=[("cap", [("y", 1.0), ("g", -100.0)], "<=", 0.0)],
        objective=[("y", -1.0), ("g", 10.0)],
    )
    oracle = brute_force_oracle(m)
    assert oracle.objective == pytest.approx(-90.0)
    assert oracle.values[VariableKey("parsed", None, None, ("g",))] == 1.0


def test_oracle_refuses_large_models():
    names = tuple(f"b{i}" for i in range(17))
    m = toy_model(names=names, binary=set(names),
                  bounds={n: (0.0, 1.0) for n in names},
                  objective=[(names[0], 1.0)])
    with pytest.raises(OracleSizeError):
        brute_force_oracle(m, max_binaries=16)


def test_oracle_detects_infeasible():
    m = toy_model(names=("b",), binary={"b"}, bounds={"b": (0.0, 1.0)},
                  rows=[("r1", [("b", 1.0)], ">=", 0.5),
                        ("r2", [("b", 1.0)], "<=", 0.5)],
                  objective=[("b", 1.0)])
    assert brute_force_oracle(m).status == "infeasible"


def test_oracle_agrees_with_solver_on_restoration_instance():
    net = two_bus_net()
    cfg = gs.PlanningConfig(horizon_periods=1)
    m = gs.build_model(net, [scenario_for(net, damaged={"l1"})], cfg)
    sol = solve(m, cfg, gap=0.0)
    oracle = brute_force_oracle(m)
    assert oracle.objective == pytest.approx(sol.objective, abs=1e-6)
    assert check_feasibility(m, oracle).ok
