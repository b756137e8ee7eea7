import numpy as np
import pytest

import gridshield as gs
from gridshield.milp.variables import DISPATCH, VariableKey
from gridshield.report import (
    RestorationTrajectory,
    aggregate_trajectory,
    compare,
    emit_report,
    served_energy,
    trajectory,
    utilization_rates,
)
from conftest import solve_checked
from instances import mg_net, scenario_for, two_bus_net


def solved_mg_instance(damaged=("l1",), horizon=6, dt=10.0, travel=20.0):
    net = mg_net(horizon=horizon, travel_minutes=travel, demand=300.0)
    scen = scenario_for(net, damaged=set(damaged))
    cfg = gs.PlanningConfig(horizon_periods=horizon, dt_minutes=dt)
    m = gs.build_model(net, [scen], cfg)
    sol = solve_checked(m, net, cfg)
    return net, scen, cfg, sol


def test_trajectory_all_curtailed_and_all_served():
    net, scen, cfg, sol = solved_mg_instance()
    traj = trajectory(sol, net, scen)
    # travel 20 min at 10-minute periods: connected from period 2
    assert traj.served_fraction[0] == pytest.approx(0.0)
    assert traj.served_fraction[-1] == pytest.approx(1.0)
    assert traj.critical_served_fraction[-1] == pytest.approx(1.0)

    intact = scenario_for(net, sid="s0")
    m2 = gs.build_model(net, [intact], cfg)
    sol2 = solve_checked(m2, net, cfg)
    traj2 = trajectory(sol2, net, intact)
    assert np.allclose(traj2.served_fraction, 1.0)


def test_trajectory_zero_demand_defines_fraction_one():
    net = two_bus_net(demand=(0.0, 0.0))
    scen = scenario_for(net)
    cfg = gs.PlanningConfig(horizon_periods=1)
    sol = solve_checked(gs.build_model(net, [scen], cfg), net, cfg)
    traj = trajectory(sol, net, scen)
    assert traj.served_fraction[0] == 1.0


def test_mg_output_gated_by_arrival():
    net, scen, cfg, sol = solved_mg_instance(horizon=6, dt=10.0, travel=20.0)
    traj = trajectory(sol, net, scen)
    out = traj.mg_output["mg1"]
    assert out[0] == 0.0  # still driving
    assert np.all(out[1:] == pytest.approx(300.0))


def test_attribution_conserves_bus_output():
    net, scen, cfg, sol = solved_mg_instance()
    traj = trajectory(sol, net, scen)
    for t in range(1, cfg.horizon_periods + 1):
        bus_total = sum(
            sol.get("mg_p", scen.id, t, (b.id,)) for b in net.connectable_buses()
        ) * net.base_kva
        attributed = sum(traj.mg_output[m][t - 1] for m in traj.mg_output)
        assert attributed == pytest.approx(bus_total, abs=1e-9)


def test_utilization_rates_and_fleet_mean():
    net, scen, cfg, sol = solved_mg_instance()
    rates, fleet = utilization_rates(sol, net, scen)
    # 300 kW served on a 400 kW unit every connected period
    assert rates["mg1"] == pytest.approx(0.75)
    assert fleet == pytest.approx(0.75)


def test_utilization_not_applicable_when_undispatched():
    net = mg_net(horizon=4, travel_minutes=15.0)
    scen = scenario_for(net)  # nothing damaged: grid serves, truck stays home
    cfg = gs.PlanningConfig(horizon_periods=4, dt_minutes=15.0)
    m = gs.build_model(net, [scen], cfg)
    m.fix_variable(VariableKey(DISPATCH, "s0", None, ("d1", "mg1", "b2")), 0.0)
    sol = solve_checked(m, net, cfg)
    rates, fleet = utilization_rates(sol, net, scen)
    assert rates["mg1"] is None
    assert fleet is None


def test_served_energy_complement_of_objective():
    net, scen, cfg, sol = solved_mg_instance()
    total, weighted, critical = served_energy(sol, net, [scen])
    demand_weighted = sum(
        scen.probability * b.weight * b.demand_p[t] * cfg.dt_hours
        for b in net.sorted_buses() for t in range(cfg.horizon_periods)
    )
    assert weighted + sol.objective == pytest.approx(demand_weighted, rel=1e-9)


def test_served_energy_trivial_cases():
    net = two_bus_net(demand=(100.0, 50.0), horizon=12)
    cfg = gs.PlanningConfig(horizon_periods=12, dt_minutes=5.0)
    scen = scenario_for(net)
    sol = solve_checked(gs.build_model(net, [scen], cfg), net, cfg)
    total, weighted, critical = served_energy(sol, net, [scen])
    assert total == pytest.approx(100.0 * 12 * (5.0 / 60.0))
    assert critical == pytest.approx(total)  # the only load is critical

    dark = scenario_for(net, damaged={"l1"}, sid="s0")
    sol2 = solve_checked(gs.build_model(net, [dark], cfg), net, cfg)
    total2, _, _ = served_energy(sol2, net, [dark])
    assert total2 == pytest.approx(0.0, abs=1e-9)


def test_served_energy_hundred_kwh_case():
    # one bus at 100 kW over 12 five-minute periods -> 100 kWh
    net = two_bus_net(demand=(100.0, 50.0), horizon=12)
    cfg = gs.PlanningConfig(horizon_periods=12, dt_minutes=5.0)
    scen = scenario_for(net)
    sol = solve_checked(gs.build_model(net, [scen], cfg), net, cfg)
    total, _, _ = served_energy(sol, net, [scen])
    assert total == pytest.approx(100.0)


def test_compare_identity_and_domination():
    net, scen, cfg, sol = solved_mg_instance()
    traj = trajectory(sol, net, scen)
    same = compare(traj, traj)
    assert np.allclose(same.delta_served_kwh, 0.0)
    assert same.pct_served_vs_baseline == 0.0

    worse = RestorationTrajectory(
        scenario_id=traj.scenario_id,
        dt_minutes=traj.dt_minutes,
        served_fraction=traj.served_fraction * 0.5,
        critical_served_fraction=traj.critical_served_fraction * 0.5,
        mg_output=traj.mg_output,
        total_demand_kw=traj.total_demand_kw,
        critical_demand_kw=traj.critical_demand_kw,
    )
    rep = compare(traj, worse)
    assert np.all(rep.cumulative_served_kwh >= 0.0)
    assert np.all(np.diff(rep.cumulative_served_kwh) >= -1e-12)


def test_compare_horizon_mismatch():
    net, scen, cfg, sol = solved_mg_instance(horizon=6)
    a = trajectory(sol, net, scen)
    net2, scen2, cfg2, sol2 = solved_mg_instance(horizon=4)
    b = trajectory(sol2, net2, scen2)
    with pytest.raises(ValueError, match="horizon"):
        compare(a, b)


def test_aggregate_trajectory_probability_mix():
    net = mg_net(horizon=4, travel_minutes=15.0, demand=200.0)
    cfg = gs.PlanningConfig(horizon_periods=4, dt_minutes=15.0)
    scens = [scenario_for(net, damaged={"l1"}, sid="s1", probability=0.5),
             scenario_for(net, sid="s2", probability=0.5)]
    sol = solve_checked(gs.build_model(net, scens, cfg), net, cfg)
    agg = aggregate_trajectory(sol, net, scens)
    t1 = trajectory(sol, net, scens[0])
    t2 = trajectory(sol, net, scens[1])
    assert np.allclose(agg.served_fraction,
                       0.5 * t1.served_fraction + 0.5 * t2.served_fraction)


def test_emit_report_shapes_and_determinism():
    net, scen, cfg, sol = solved_mg_instance(horizon=6)
    traj = trajectory(sol, net, scen)
    csv = emit_report(traj, "csv")
    lines = csv.strip().splitlines()
    assert lines[0] == "t,served_fraction,critical_served_fraction,mg1"
    assert len(lines) == 1 + 6
    assert emit_report(traj, "csv") == csv
    text = emit_report(traj, "text")
    assert text.splitlines()[0].split() == ["t", "served_fraction",
                                            "critical_served_fraction", "mg1"]


def test_emit_report_empty_horizon_header_only():
    traj = RestorationTrajectory(
        scenario_id="s0", dt_minutes=5.0,
        served_fraction=np.zeros(0), critical_served_fraction=np.zeros(0),
        mg_output={}, total_demand_kw=np.zeros(0), critical_demand_kw=np.zeros(0),
    )
    assert emit_report(traj, "csv") == "t,served_fraction,critical_served_fraction\n"


def test_emit_report_comparison_columns():
    net, scen, cfg, sol = solved_mg_instance(horizon=6)
    traj = trajectory(sol, net, scen)
    rep = compare(traj, traj)
    lines = emit_report(rep, "csv").strip().splitlines()
    assert lines[0].startswith("t,delta_served_kwh,delta_critical_kwh")
    assert len(lines) == 7
