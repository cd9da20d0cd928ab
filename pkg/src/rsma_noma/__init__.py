"""Weighted sum-rate power/rate allocation for downlink hybrid RSMA-NOMA."""

from .driver import RunStatus, SolveReport, initialize, run, run_mode_suite
from .oracle import OracleResult, grid_search, verify
from .rates import (Allocation, RateBreakdown, check_feasibility, rate_breakdown,
                    weighted_sum_rate)
from .scenario import (ChannelRealization, Mode, ScenarioConfig, dbm_to_watts,
                       draw_channels, load_config, path_loss_db)
from .solver import ConvexProgram, SolveStatus, SolverOutcome, solve
from .transform import ExpansionPoint, SubproblemSpec, assemble_subproblem

__all__ = [
    "Allocation", "ChannelRealization", "ConvexProgram", "ExpansionPoint",
    "Mode", "OracleResult", "RateBreakdown", "RunStatus", "ScenarioConfig",
    "SolveReport", "SolveStatus", "SolverOutcome", "SubproblemSpec",
    "assemble_subproblem", "check_feasibility", "dbm_to_watts", "draw_channels",
    "grid_search", "initialize", "load_config", "path_loss_db", "rate_breakdown",
    "run", "run_mode_suite", "solve", "verify", "weighted_sum_rate",
]
