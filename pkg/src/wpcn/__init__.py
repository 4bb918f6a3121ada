"""Energy-budgeted transmission policies for a wireless-powered link.

Builds a quantized time-correlated fading channel and a battery-aware
block model, solves the throughput-maximization problem under a long-run
energy budget with a Lagrangian value-iteration solver, and ships a myopic
baseline, a Monte-Carlo simulator, and a sweep CLI.
"""

__version__ = "0.1.0"

from .baselines import myopic_policy
from .channel import ChannelModel, RicianFading, build_channel_model
from .config import ExperimentConfig
from .errors import (ConfigError, ModelValidityError, MultiChainWarning,
                     NumericalError)
from .kernels import backend as kernel_backend
from .sim import Trajectory, discounted_estimate, rollout
from .solver import (FiniteCmdp, MixedPolicy, evaluate_mixed, evaluate_policy,
                     solve_cmdp, stationary_distribution, value_iteration)
from .system import (Action, ActionGrid, SystemParams, SystemState, WpcnModel,
                     build_model)

__all__ = [
    "__version__",
    "Action",
    "ActionGrid",
    "ChannelModel",
    "ConfigError",
    "ExperimentConfig",
    "FiniteCmdp",
    "MixedPolicy",
    "ModelValidityError",
    "MultiChainWarning",
    "NumericalError",
    "RicianFading",
    "SystemParams",
    "SystemState",
    "Trajectory",
    "WpcnModel",
    "build_channel_model",
    "build_model",
    "discounted_estimate",
    "evaluate_mixed",
    "evaluate_policy",
    "kernel_backend",
    "myopic_policy",
    "rollout",
    "solve_cmdp",
    "stationary_distribution",
    "value_iteration",
]
