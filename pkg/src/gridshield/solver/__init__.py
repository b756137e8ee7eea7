from .backend import (
    BackendError,
    CommandBackend,
    HighsBackend,
    SOLVER_CMD_ENV,
    Solution,
    emit_solution,
    parse_solution,
    solve,
)
from .check import FeasibilityReport, RowViolation, check_feasibility, verify_radiality
from .emit import NameLengthError, emit_model, parse_model
from .oracle import OracleSizeError, brute_force_oracle

__all__ = [
    "BackendError",
    "CommandBackend",
    "HighsBackend",
    "SOLVER_CMD_ENV",
    "Solution",
    "emit_solution",
    "parse_solution",
    "solve",
    "FeasibilityReport",
    "RowViolation",
    "check_feasibility",
    "verify_radiality",
    "NameLengthError",
    "emit_model",
    "parse_model",
    "OracleSizeError",
    "brute_force_oracle",
]
