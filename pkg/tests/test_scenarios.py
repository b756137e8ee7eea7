import numpy as np
import pytest

import gridshield as gs
from gridshield.scenarios import (
    DamageScenario,
    FragilityCurve,
    ScenarioSet,
    damage_probability,
    emit_scenarios,
    monte_carlo,
    parse_scenarios,
    reduce_scenarios,
    sample_scenario,
    scenario_distance,
)
from instances import two_bus_net, desk_network


def curve(i50=10.0, steep=1.0, mult=0.0):
    return FragilityCurve(intensity_50=i50, steepness=steep, underground_multiplier=mult)


def test_damage_probability_midpoint():
    net = two_bus_net()
    ln = net.lines["l1"]
    assert damage_probability(curve(), ln, 10.0) == pytest.approx(0.5)


def test_damage_probability_low_tail():
    net = two_bus_net()
    ln = net.lines["l1"]
    assert damage_probability(curve(steep=50.0), ln, 0.0) < 1e-12
    assert damage_probability(curve(steep=50.0), ln, 1e9) == pytest.approx(1.0)


def test_damage_probability_underground_scaling():
    from dataclasses import replace

    over = two_bus_net().lines["l1"]
    under = replace(over, kind="candidate")
    c = curve(mult=0.05)
    for intensity in (3.0, 10.0, 25.0):
        assert damage_probability(c, under, intensity) == pytest.approx(
            0.05 * damage_probability(c, over, intensity))


def test_damage_probability_monotone_grids():
    from dataclasses import replace

    net = two_bus_net()
    ln = net.lines["l1"]
    grid = np.linspace(0.0, 40.0, 81)
    probs = [damage_probability(curve(), ln, i) for i in grid]
    assert all(b >= a for a, b in zip(probs, probs[1:]))
    under = replace(ln, kind="candidate")
    mults = np.linspace(0.0, 1.0, 11)
    by_mult = [damage_probability(curve(mult=m), under, 15.0) for m in mults]
    assert all(b >= a for a, b in zip(by_mult, by_mult[1:]))


def test_sample_scenario_extremes():
    net = desk_network()
    rng = np.random.default_rng(0)
    intact = sample_scenario(net, curve(steep=50.0), 0.0, rng)
    assert set(intact.availability.values()) == {1}
    rng = np.random.default_rng(0)
    wiped = sample_scenario(net, curve(steep=50.0), 1e6, rng)
    assert set(wiped.availability.values()) == {0}


def test_sample_scenario_seeded_reproducible():
    net = desk_network()
    a = sample_scenario(net, curve(), 10.0, np.random.default_rng(42))
    b = sample_scenario(net, curve(), 10.0, np.random.default_rng(42))
    assert a.availability == b.availability
    c = sample_scenario(net, curve(), 10.0, np.random.default_rng(43))
    # a different stream should eventually differ; p=0.5 per line makes a
    # 12-line coincidence astronomically unlikely but not impossible
    assert a.availability != c.availability


def test_monte_carlo_counts_and_probability():
    net = desk_network()
    full = monte_carlo(net, curve(), 10.0, 1000, seed=7)
    assert len(full) == 1000
    assert sum(s.probability for s in full.scenarios) == pytest.approx(1.0, abs=1e-9)
    single = monte_carlo(net, curve(), 10.0, 1, seed=7)
    assert len(single) == 1 and single.scenarios[0].probability == 1.0


def test_monte_carlo_deterministic_bytes():
    net = desk_network()
    a = emit_scenarios(monte_carlo(net, curve(), 10.0, 50, seed=3))
    b = emit_scenarios(monte_carlo(net, curve(), 10.0, 50, seed=3))
    assert a == b
    c = emit_scenarios(monte_carlo(net, curve(), 10.0, 50, seed=4))
    assert a != c


def test_scenario_file_round_trip():
    net = desk_network()
    full = monte_carlo(net, curve(), 10.0, 20, seed=1)
    again = parse_scenarios(emit_scenarios(full), net)
    assert emit_scenarios(again) == emit_scenarios(full)


def test_scenario_distance_basics():
    net = two_bus_net()
    intact = gs.undamaged_scenario(net, "a")
    assert scenario_distance(intact, intact, net) == 0.0
    damaged = DamageScenario("b", {"l1": 0}, 1.0)
    assert scenario_distance(intact, damaged, net) == 700.0
    assert scenario_distance(intact, damaged, net, length_weighted=False) == 1.0


def test_scenario_distance_total_length():
    net = desk_network()
    intact = gs.undamaged_scenario(net, "a")
    wiped = DamageScenario("b", {k: 0 for k in intact.availability}, 1.0)
    total = sum(ln.length_ft for ln in net.existing_lines())
    assert scenario_distance(intact, wiped, net) == pytest.approx(total)


def test_scenario_distance_mismatched_universe():
    net = two_bus_net()
    a = gs.undamaged_scenario(net, "a")
    b = DamageScenario("b", {"other": 1}, 1.0)
    with pytest.raises(ValueError):
        scenario_distance(a, b, net)


def _greedy_reference(scenarios, k, net):
    """Independent brute-force evaluation of the fast-forward rule."""
    n = len(scenarios)
    d = [[scenario_distance(scenarios[i], scenarios[j], net) for j in range(n)]
         for i in range(n)]
    prob = [s.probability for s in scenarios]
    selected = []
    for _ in range(k):
        best, best_cost = None, None
        for u in range(n):
            if u in selected:
                continue
            cost = sum(
                prob[v] * min([d[v][s] for s in selected] + [d[v][u]])
                for v in range(n) if v != u and v not in selected
            )
            if best_cost is None or cost < best_cost - 1e-15:
                best, best_cost = u, cost
        selected.append(best)
    redistributed = {s: prob[s] for s in selected}
    for v in range(n):
        if v in selected:
            continue
        nearest = min(selected, key=lambda s: (d[v][s], selected.index(s)))
        redistributed[nearest] += prob[v]
    return sorted(selected), redistributed


def _three_line_net():
    return gs.parse_network({
        "base_mva": 1.0, "horizon": 1,
        "buses": [
            {"id": "b1", "demand_p": 0, "demand_q": 0, "is_root": True},
            {"id": "b2", "demand_p": 10, "demand_q": 5},
            {"id": "b3", "demand_p": 10, "demand_q": 5},
            {"id": "b4", "demand_p": 10, "demand_q": 5},
        ],
        "lines": [
            {"id": "x", "from_bus": "b1", "to_bus": "b2", "r": 0.01, "x": 0.02,
             "capacity": 1.0, "length_ft": 1.0},
            {"id": "y", "from_bus": "b2", "to_bus": "b3", "r": 0.01, "x": 0.02,
             "capacity": 1.0, "length_ft": 2.0},
            {"id": "z", "from_bus": "b3", "to_bus": "b4", "r": 0.01, "x": 0.02,
             "capacity": 1.0, "length_ft": 4.0},
        ],
        "dgs": [{"id": "sub", "bus": "b1", "p_max": 100}],
    })


def test_reduce_identity_when_k_equals_n():
    net = desk_network()
    full = monte_carlo(net, curve(), 10.0, 10, seed=2)
    assert reduce_scenarios(full, 10, net) is full


def test_reduce_merges_identical_scenarios():
    net = _three_line_net()
    s = gs.undamaged_scenario(net, "a", probability=1.0 / 3)
    trio = ScenarioSet((
        DamageScenario("a", s.availability, 1.0 / 3),
        DamageScenario("b", s.availability, 1.0 / 3),
        DamageScenario("c", s.availability, 1.0 / 3),
    ), seed=0)
    out = reduce_scenarios(trio, 1, net)
    assert len(out) == 1
    assert out.scenarios[0].probability == pytest.approx(1.0)


def test_reduce_matches_hand_worked_greedy_case():
    # universe {x:1ft, y:2ft, z:4ft}; A,A',B,C with d(A,B)=1 < d(A,C)=6,
    # d(B,C)=7 > d(A,C); equal quarter weights
    net = _three_line_net()
    intact = {"x": 1, "y": 1, "z": 1}
    a1 = DamageScenario("a1", dict(intact), 0.25)
    a2 = DamageScenario("a2", dict(intact), 0.25)
    b = DamageScenario("b", {"x": 0, "y": 1, "z": 1}, 0.25)
    c = DamageScenario("c", {"x": 1, "y": 0, "z": 0}, 0.25)
    sset = ScenarioSet((a1, a2, b, c), seed=0)
    assert scenario_distance(a1, b, net) == 1.0
    assert scenario_distance(a1, c, net) == 6.0
    assert scenario_distance(b, c, net) == 7.0

    out = reduce_scenarios(sset, 2, net)
    # greedy picks a1 then c; a2 and b both fold into a1
    assert [s.id for s in out.scenarios] == ["a1", "c"]
    probs = {s.id: s.probability for s in out.scenarios}
    assert probs["a1"] == pytest.approx(0.75)
    assert probs["c"] == pytest.approx(0.25)

    sel, redis = _greedy_reference(list(sset.scenarios), 2, net)
    assert sel == [0, 3]
    assert redis[0] == pytest.approx(0.75) and redis[3] == pytest.approx(0.25)


def test_reduce_against_reference_on_sampled_sets():
    net = desk_network()
    for seed, k in ((11, 3), (12, 5), (13, 2)):
        full = monte_carlo(net, curve(), 10.0, 12, seed=seed)
        out = reduce_scenarios(full, k, net)
        sel, redis = _greedy_reference(list(full.scenarios), k, net)
        assert [s.id for s in out.scenarios] == [full.scenarios[i].id for i in sorted(sel)]
        by_id = {full.scenarios[i].id: p for i, p in redis.items()}
        for s in out.scenarios:
            assert s.probability == pytest.approx(by_id[s.id], abs=1e-12)


def test_reduce_probability_conservation_and_idempotence():
    net = desk_network()
    full = monte_carlo(net, curve(), 10.0, 30, seed=9)
    out = reduce_scenarios(full, 6, net)
    assert sum(s.probability for s in out.scenarios) == pytest.approx(1.0, abs=1e-9)
    again = reduce_scenarios(out, 6, net)
    assert emit_scenarios(again) == emit_scenarios(out)


def test_reduce_k_out_of_range():
    net = desk_network()
    full = monte_carlo(net, curve(), 10.0, 5, seed=1)
    with pytest.raises(ValueError):
        reduce_scenarios(full, 0, net)
    with pytest.raises(ValueError):
        reduce_scenarios(full, 6, net)


def test_candidate_lines_never_sampled():
    net = desk_network()
    full = monte_carlo(net, curve(steep=50.0), 1e6, 3, seed=5)
    existing = {ln.id for ln in net.existing_lines()}
    for s in full.scenarios:
        assert set(s.availability) == existing


def test_scenario_set_validates_probability_sum():
    net = two_bus_net()
    s = gs.undamaged_scenario(net, "a", probability=0.5)
    with pytest.raises(ValueError):
        ScenarioSet((s,), seed=0)
