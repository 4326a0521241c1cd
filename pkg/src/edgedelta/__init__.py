"""Edge-federation orchestration simulator with delta caching, tiered filtering, and hardware matching."""

from .domain import (
    Ablation,
    CacheMode,
    ConfigError,
    EdgeNode,
    EfficiencyMatrix,
    EvictionWeights,
    Hardware,
    Model,
    PolicyKind,
    RewardWeights,
    SimConfig,
    Task,
    efficiency_lookup,
    validate_config,
)
from .kernels import BACKEND

__version__ = "0.1.0"
