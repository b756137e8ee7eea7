import json
import math

import numpy as np
import pytest

import gridshield as gs
from gridshield.network import IntegrityError, InvalidNetworkError, SchemaError
from instances import two_bus_net


def three_bus_doc(**overrides):
    doc = {
        "base_mva": 1.0,
        "horizon": 2,
        "buses": [
            {"id": "b1", "demand_p": 0, "demand_q": 0, "is_root": True},
            {"id": "b2", "demand_p": 100, "demand_q": 40},
            {"id": "b3", "demand_p": 50, "demand_q": 20},
        ],
        "lines": [
            {"id": "l1", "from_bus": "b1", "to_bus": "b2", "r": 0.01, "x": 0.02,
             "capacity": 1.0, "length_ft": 700.0},
            {"id": "l2", "from_bus": "b2", "to_bus": "b3", "r": 0.01, "x": 0.02,
             "capacity": 1.0, "length_ft": 500.0},
        ],
        "dgs": [{"id": "sub", "bus": "b1", "p_max": 500}],
    }
    doc.update(overrides)
    return doc


def test_parse_three_bus_counts():
    net = gs.parse_network(json.dumps(three_bus_doc()))
    assert len(net.buses) == 3
    assert len(net.existing_lines()) == 2
    assert net.candidate_lines() == []
    assert net.root_id == "b1"


def test_parse_dangling_bus_is_integrity_error():
    doc = three_bus_doc()
    doc["lines"][1]["to_bus"] = "99"
    with pytest.raises(IntegrityError, match="99"):
        gs.parse_network(doc)


def test_parse_demand_series_length_mismatch():
    doc = three_bus_doc(horizon=24)
    doc["buses"][1]["demand_p"] = [100.0] * 24
    doc["buses"][1]["demand_q"] = [40.0] * 24
    net = gs.parse_network(doc)
    assert len(net.buses["b2"].demand_p) == 24

    doc["buses"][1]["demand_p"] = [100.0] * 23
    with pytest.raises(InvalidNetworkError, match="horizon"):
        gs.parse_network(doc)


def test_parse_schema_error_names_path():
    doc = three_bus_doc()
    del doc["buses"][0]["id"]
    with pytest.raises(SchemaError, match=r"\$\.buses\[0\]"):
        gs.parse_network(doc)


def test_demand_profile_scales_static_value():
    doc = three_bus_doc()
    doc["buses"][1]["profile"] = [1.0, 0.5]
    net = gs.parse_network(doc)
    assert np.allclose(net.buses["b2"].demand_p, [100.0, 50.0])
    assert np.allclose(net.buses["b2"].demand_q, [40.0, 20.0])


def test_critical_default_weight():
    doc = three_bus_doc()
    doc["buses"][2]["critical"] = True
    net = gs.parse_network(doc)
    assert net.buses["b3"].weight == 10.0
    assert net.buses["b2"].weight == 1.0


def test_adjacency_path_graph():
    net = gs.parse_network(three_bus_doc())
    nbrs = gs.adjacency(net, "b2")
    assert [n for n, _ in nbrs] == ["b1", "b3"]
    # symmetric relation, no self loops
    for bus in net.buses:
        for other, ln in gs.adjacency(net, bus):
            assert other != bus
            assert bus in [n for n, _ in gs.adjacency(net, other)]


def test_adjacency_unknown_bus():
    net = gs.parse_network(three_bus_doc())
    with pytest.raises(KeyError):
        gs.adjacency(net, "nope")


def test_adjacency_isolated_bus_empty():
    # an isolated bus fails connectivity at parse, so build the Network by hand
    from gridshield.network import Bus, Network

    net = gs.parse_network(three_bus_doc())
    iso = Network(
        buses={**net.buses, "b4": Bus("b4", np.zeros(2), np.zeros(2))},
        lines=net.lines, dgs=net.dgs, horizon=2,
    )
    assert gs.adjacency(iso, "b4") == []


def test_adjacency_reports_line_kinds():
    doc = three_bus_doc()
    doc["lines"].append({"id": "c1", "from_bus": "b1", "to_bus": "b3",
                         "r": 0.01, "x": 0.01, "capacity": 1.0,
                         "length_ft": 400.0, "kind": "candidate"})
    net = gs.parse_network(doc)
    kinds = {ln.kind for _, ln in gs.adjacency(net, "b1")}
    assert kinds == {"existing", "candidate"}


def test_line_length_miles():
    from dataclasses import replace

    net = gs.parse_network(three_bus_doc())
    ln = net.lines["l1"]
    assert math.isclose(gs.line_length_miles(ln), 700.0 / 5280.0, rel_tol=1e-15)
    assert abs(gs.line_length_miles(ln) - 0.1325757575) < 1e-9
    assert gs.line_length_miles(replace(ln, length_ft=5280.0)) == 1.0
    assert abs(gs.line_length_miles(replace(ln, length_ft=4100.0)) - 0.7765151515) < 1e-9


def test_validate_two_roots():
    doc = three_bus_doc()
    doc["buses"][1]["is_root"] = True
    with pytest.raises(InvalidNetworkError) as err:
        gs.parse_network(doc)
    assert "root" in err.value.report.kinds()


def test_validate_disconnected_island_names_buses():
    from gridshield.network import Bus, Line, Network

    buses = {
        "b1": Bus("b1", np.zeros(1), np.zeros(1), is_root=True),
        "b2": Bus("b2", np.zeros(1), np.zeros(1)),
        "b3": Bus("b3", np.zeros(1), np.zeros(1)),
        "b4": Bus("b4", np.zeros(1), np.zeros(1)),
    }
    lines = {
        "l1": Line("l1", "b1", "b2", 0.01, 0.02, 1.0, 100.0),
        "l2": Line("l2", "b3", "b4", 0.01, 0.02, 1.0, 100.0),
    }
    report = gs.validate(Network(buses=buses, lines=lines, horizon=1))
    conn = [v for v in report.violations if v.kind == "connectivity"]
    assert len(conn) == 1
    assert "b3" in conn[0].message and "b4" in conn[0].message


def test_validate_clean_network_empty_report():
    net = gs.parse_network(three_bus_doc())
    assert gs.validate(net).ok


def test_validate_candidate_must_be_switchable():
    from gridshield.network import Bus, Line, Network

    buses = {
        "b1": Bus("b1", np.zeros(1), np.zeros(1), is_root=True),
        "b2": Bus("b2", np.zeros(1), np.zeros(1)),
    }
    lines = {
        "l1": Line("l1", "b1", "b2", 0.01, 0.02, 1.0, 100.0),
        "c1": Line("c1", "b1", "b2", 0.01, 0.02, 1.0, 100.0,
                   kind="candidate", switchable=False),
    }
    report = gs.validate(Network(buses=buses, lines=lines, horizon=1))
    assert "candidate-switch" in report.kinds()


def test_emit_parse_round_trip_identity():
    net = gs.parse_network(three_bus_doc())
    text = gs.emit_network(net)
    again = gs.emit_network(gs.parse_network(text))
    assert text == again


def test_per_unit_round_trip():
    net = two_bus_net()
    for kw in (0.1, 1.0, 123.456, 98765.4321):
        back = float(net.pu_to_kw(net.kw_to_pu(kw)))
        assert abs(back - kw) / kw <= 1e-12


def test_with_mobile_fleet_prefix():
    from instances import desk_network

    net = desk_network()
    assert [m.id for m in gs.with_mobile_fleet(net, 2).sorted_mobile_gens()] == ["mg1", "mg2"]
    assert gs.with_mobile_fleet(net, 0).mobile_gens == {}
