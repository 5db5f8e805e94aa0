"""Low-power pulse switching of memristors with Caputo fractional-order dynamics."""

__version__ = "0.1.0"

from .device import DeviceParams, SwitchingTask, memristance, state_rate, voltage  # noqa: E402
from .errors import ConfigError, DomainError, FracmemError, InfeasibleError  # noqa: E402
from .fraccalc import (  # noqa: E402
    FractionalOrder,
    SampledSignal,
    Trajectory,
    caputo_derivative,
    gamma,
    oracle_solve,
    rl_integral,
)
from .optimizer import OptimizationResult, OptimizerConfig, RegimeLabel, optimize_double, optimize_single  # noqa: E402
