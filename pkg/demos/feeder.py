"""A small shared planning instance for the demo scripts.

Thirteen buses on two feeders with laterals, four critical loads, three
candidate underground tie lines between critical pockets, two stationary
generators, and a three-truck mobile fleet staged at one depot.
"""

import gridshield as gs


def build_network(horizon=8):
    buses = [{"id": "b01", "demand_p": 0, "demand_q": 0, "is_root": True}]
    demands = {
        "b02": (80, 30), "b03": (100, 40), "b04": (60, 25), "b05": (150, 60),
        "b06": (90, 35), "b07": (70, 30), "b08": (140, 55), "b09": (50, 20),
        "b10": (120, 45), "b11": (40, 15), "b12": (110, 40), "b13": (90, 35),
    }
    critical = {"b05", "b08", "b10", "b12"}
    connectable = {"b03", "b05", "b08", "b10", "b12"}
    buses += [{"id": b, "demand_p": p, "demand_q": q,
               "critical": b in critical,
               "max_mobile_gens": 1 if b in connectable else 0}
              for b, (p, q) in sorted(demands.items())]
    switched = {"l01", "l05", "l08"}
    edges = [
        ("l01", "b01", "b02", 2.5), ("l02", "b02", "b03", 1.5), ("l03", "b03", "b04", 1.0),
        ("l04", "b04", "b05", 1.0), ("l05", "b01", "b06", 2.5), ("l06", "b06", "b07", 1.5),
        ("l07", "b07", "b08", 1.0), ("l08", "b02", "b09", 1.5), ("l09", "b09", "b10", 1.0),
        ("l10", "b06", "b11", 1.0), ("l11", "b11", "b12", 1.0), ("l12", "b09", "b13", 1.0),
    ]
    lines = [{"id": lid, "from_bus": a, "to_bus": b, "r": 0.01, "x": 0.02,
              "capacity": cap, "length_ft": 900.0, "switchable": lid in switched}
             for lid, a, b, cap in edges]
    lines += [
        {"id": "c01", "from_bus": "b05", "to_bus": "b08", "r": 0.008, "x": 0.016,
         "capacity": 1.0, "length_ft": 800.0, "kind": "candidate"},
        {"id": "c02", "from_bus": "b10", "to_bus": "b12", "r": 0.008, "x": 0.016,
         "capacity": 1.0, "length_ft": 700.0, "kind": "candidate"},
        {"id": "c03", "from_bus": "b04", "to_bus": "b13", "r": 0.008, "x": 0.016,
         "capacity": 1.0, "length_ft": 600.0, "kind": "candidate"},
    ]
    return gs.parse_network({
        "base_mva": 1.0, "nominal_voltage_pu": 1.0, "horizon": horizon,
        "buses": buses,
        "lines": lines,
        "dgs": [
            {"id": "sub", "bus": "b01", "p_max": 3000, "q_max": 2000, "q_min": -2000},
            {"id": "dg2", "bus": "b07", "p_max": 200, "q_max": 150, "q_min": -150},
        ],
        "depots": [{"id": "d1", "travel_minutes": {
            "b03": 15, "b05": 30, "b08": 30, "b10": 40, "b12": 45}}],
        "mobile_gens": [
            {"id": "mg1", "p_max": 200, "q_max": 150, "home_depot": "d1"},
            {"id": "mg2", "p_max": 300, "q_max": 200, "home_depot": "d1"},
            {"id": "mg3", "p_max": 500, "q_max": 400, "home_depot": "d1"},
        ],
    })


def build_config(**overrides):
    base = dict(dt_minutes=15.0, horizon_periods=8, budget=500_000.0,
                max_underground=3, optimality_gap=0.0)
    base.update(overrides)
    return gs.PlanningConfig(**base)
