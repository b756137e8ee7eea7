"""gridshield: distribution-system resilience planning.

A stochastic multi-period MILP that chooses where to build underground
lines (first stage) and how to dispatch mobile generators and reconfigure
switches after a disaster (per-scenario recourse), minimizing
priority-weighted unserved energy under linearized branch power flow.
"""

__version__ = "0.1.0"

from .network import (
    Bus,
    DGUnit,
    Depot,
    IntegrityError,
    InvalidNetworkError,
    Line,
    MobileGen,
    Network,
    NetworkError,
    SchemaError,
    ValidationReport,
    adjacency,
    emit_network,
    line_length_miles,
    load_network,
    parse_network,
    validate,
    with_mobile_fleet,
)
from .scenarios import (
    DamageScenario,
    FragilityCurve,
    ScenarioSet,
    damage_probability,
    emit_scenarios,
    load_scenarios,
    monte_carlo,
    parse_scenarios,
    reduce_scenarios,
    sample_scenario,
    scenario_distance,
    undamaged_scenario,
)
from .milp import (
    MilpModel,
    PlanningConfig,
    build_model,
    compute_investment_cost,
    index_variables,
    predicted_model_size,
)
from .solver import (
    HighsBackend,
    CommandBackend,
    Solution,
    brute_force_oracle,
    check_feasibility,
    emit_model,
    parse_model,
    solve,
    verify_radiality,
)
from .report import (
    ComparisonReport,
    RestorationTrajectory,
    aggregate_trajectory,
    compare,
    emit_report,
    served_energy,
    trajectory,
    utilization_rates,
)
