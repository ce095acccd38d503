"""Competitive online algorithms for convex optimization with structured memory,
and their use as controllers for input-disturbed linear systems."""

from .bounds import lower_bound_cr, robd_cr_upper, robd_optimal_cr
from .control import (
    CanonicalSystem,
    ControlCostSpec,
    ControlTrace,
    cost_of_trace,
    reduce_offline,
    run_controller,
)
from .errors import (
    ConfigError,
    ContractError,
    ConvergenceError,
    DomainError,
    InconsistentInstanceError,
    NoStableControllerError,
    SearchSpaceError,
)
from .model import (
    CostGeometry,
    EstimationSet,
    OcoInstance,
    Step,
    SwitchingStructure,
    Trajectory,
    evaluate_trajectory,
    switching_cost,
)
from .optimistic import run_lambda_zero, run_optimistic
from .oracles import best_linear_controller, offline_optimal_control, offline_optimal_oco
from .robd import RobdParams, run_robd

__version__ = "0.1.0"
