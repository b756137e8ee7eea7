import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import gridshield as gs
from gridshield.solver.check import check_feasibility, verify_radiality


def solve_checked(model, net, cfg=None, gap=0.0, backend=None):
    """Solve and run the independent verifications every solved instance
    must pass: zero feasibility violations at 1e-6 and a radial
    closed-switch subgraph."""
    sol = gs.solve(model, cfg, backend=backend, gap=gap)
    assert sol.feasible, f"expected a feasible solve, got {sol.status}"
    report = check_feasibility(model, sol, tol=1e-6)
    assert report.ok, f"feasibility violations: {report.violations[:5]}"
    assert verify_radiality(sol, net) == []
    return sol


@pytest.fixture(scope="session")
def desk():
    from instances import desk_config, desk_network, desk_scenarios

    net = desk_network()
    return net, desk_scenarios(net), desk_config()
