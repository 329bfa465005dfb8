"""Semi-active quarter-car suspension laboratory: plant, fuzzy/PID control,
chaotic fruit fly gain tuning, road synthesis and closed-loop comparison."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.1.0"

from .dynamics import SuspensionParams, VehicleState
from .fuzzy import FuzzySystem, RuleBase
from .pid import JudgmentWeights, PidGains
from .road import RoadProfile, RoadSpec, generate_profile
from .sim import (ComparisonTable, Metrics, Scenario, SimConfig, TimeSeries, compute_metrics,
                  integrate_closed_loop, run_comparison)

__all__ = [
    "ComparisonTable",
    "FuzzySystem",
    "JudgmentWeights",
    "Metrics",
    "PidGains",
    "RoadProfile",
    "RoadSpec",
    "RuleBase",
    "Scenario",
    "SimConfig",
    "SuspensionParams",
    "TimeSeries",
    "VehicleState",
    "__version__",
    "compute_metrics",
    "generate_profile",
    "integrate_closed_loop",
    "run_comparison",
]
