from .config import PlanningConfig
from .variables import (
    KIND_ORDER,
    VariableIndex,
    VariableKey,
    VarDef,
    index_variables,
)
from .model import Constraint, MilpModel
from .build import (
    add_damage_coupling,
    add_dg_limits,
    add_flow_limits,
    add_investment_constraints,
    add_load_curtailment,
    add_mg_logistics,
    add_mg_output,
    add_objective,
    add_power_balance,
    add_radiality,
    add_voltage_drop,
    arrival_steps,
    build_model,
    compute_big_m,
    compute_investment_cost,
    predicted_model_size,
)

__all__ = [
    "PlanningConfig",
    "KIND_ORDER",
    "VariableIndex",
    "VariableKey",
    "VarDef",
    "index_variables",
    "Constraint",
    "MilpModel",
    "add_damage_coupling",
    "add_dg_limits",
    "add_flow_limits",
    "add_investment_constraints",
    "add_load_curtailment",
    "add_mg_logistics",
    "add_mg_output",
    "add_objective",
    "add_power_balance",
    "add_radiality",
    "add_voltage_drop",
    "arrival_steps",
    "build_model",
    "compute_big_m",
    "compute_investment_cost",
    "predicted_model_size",
]
