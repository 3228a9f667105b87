"""storkit: exact scheduling and forecast-horizon analysis for price-taker
energy storage systems."""

from .core import (HorizonConfig, PriceSeries, Schedule, ScheduleResult, StorageSpec,
                   profit_of, propagate_soe, validate_schedule)
from .errors import (DomainError, InfeasibleError, InputError, InternalError,
                     SizeLimitError, StorkitError)
from .horizon import (HorizonReport, ReachableBounds, check_forecast_horizon,
                      fleet_min_forecast_horizon, min_forecast_horizon, reachable_bounds,
                      suboptimality_bound, tmin)
from .pwl import IntervalSet, PwlFunction
from .rolling import SimulationResult, Strategy, compare, run_strategy
from .solver import (backward_values, forward_values, recover_schedule,
                     solve_fixed_terminal, solve_free_terminal)

__version__ = "0.1.0"

__all__ = [
    "StorageSpec", "PriceSeries", "HorizonConfig", "Schedule", "ScheduleResult",
    "validate_schedule", "profit_of", "propagate_soe",
    "PwlFunction", "IntervalSet",
    "forward_values", "backward_values", "solve_fixed_terminal", "solve_free_terminal",
    "recover_schedule",
    "ReachableBounds", "HorizonReport", "reachable_bounds", "check_forecast_horizon",
    "tmin", "min_forecast_horizon", "suboptimality_bound", "fleet_min_forecast_horizon",
    "Strategy", "SimulationResult", "run_strategy", "compare",
    "StorkitError", "InputError", "DomainError", "InfeasibleError", "InternalError",
    "SizeLimitError",
    "__version__",
]
