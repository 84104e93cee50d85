"""Energy-aware matching of user requests to a parked-vehicle fog or the cloud."""
from .errors import (
    ConfigurationError,
    InfeasibleInstanceError,
    ProblemSizeError,
    SearchBudgetError,
    VFogError,
)
from .experiments import SweepConfig, SweepRow, baseline_cloud_only, run_sweep, summarize
from .problem import Assignment, Metrics, check_feasible, metrics, objective
from .scenario import Instance, Request, ScenarioConfig, Vehicle, build_instance
from .solvers import Solution, lower_bound, solve, solve_brute, solve_exact, solve_greedy
from .topology import CLOUD, CloudSpec, PathModel, VehicleTarget

__version__ = "0.1.0"
