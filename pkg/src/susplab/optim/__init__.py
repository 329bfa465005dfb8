"""PID gain optimizers: chaotic fruit fly search and comparison baselines."""
from .baselines import (BfoConfig, FoaConfig, GaConfig, PsoConfig, baseline_minimize,
                        foa_minimize)
from .cfoa import CfoaConfig, FlyLocation, cfoa_minimize, chaotic_update, logistic_step
from .common import OptimizationError, OptResult, smell_concentration
from .zn import LtiPlant, UltimatePoint, ZnError, oscillation_growth, ultimate_point, zn_tune

__all__ = [
    "BfoConfig",
    "CfoaConfig",
    "FlyLocation",
    "FoaConfig",
    "GaConfig",
    "LtiPlant",
    "OptResult",
    "OptimizationError",
    "PsoConfig",
    "UltimatePoint",
    "ZnError",
    "baseline_minimize",
    "cfoa_minimize",
    "chaotic_update",
    "foa_minimize",
    "logistic_step",
    "oscillation_growth",
    "smell_concentration",
    "ultimate_point",
    "zn_tune",
]
