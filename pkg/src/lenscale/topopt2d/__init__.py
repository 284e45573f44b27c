"""Robust topology optimisation of a 2D heat sink."""

from .fem import KE, HeatProblem, SingularSystemError, ThermalModel, ThermalSolution, solve_thermal
from .mma import MMA
from .robust import (
    BetaSchedule,
    ConstraintMode,
    DesignState2D,
    HistoryRow,
    RobustConfig,
    RobustHeatSink,
    optimize,
    scale_dilated_bound,
)

__all__ = [
    "KE", "HeatProblem", "SingularSystemError", "ThermalModel", "ThermalSolution",
    "solve_thermal", "MMA", "BetaSchedule", "ConstraintMode", "DesignState2D", "HistoryRow",
    "RobustConfig", "RobustHeatSink", "optimize", "scale_dilated_bound",
]
