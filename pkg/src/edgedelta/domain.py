"""Core value types, run configuration, and the model/hardware efficiency table."""

from __future__ import annotations

import dataclasses
import enum
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

log = logging.getLogger(__name__)


class Model(str, enum.Enum):
    YOLOV5 = "YOLOV5"
    RESNET50 = "RESNET50"
    BERT = "BERT"


class Hardware(str, enum.Enum):
    GPU = "GPU"
    NPU = "NPU"
    CPU = "CPU"
    FPGA = "FPGA"


class PolicyKind(str, enum.Enum):
    RANDOM = "random"
    GREEDY_RR = "greedy_rr"
    DAOEF_PROXIMITY = "daoef_proximity"
    TD_LEARNER = "td_learner"


class CacheMode(str, enum.Enum):
    DELTA = "delta"  # similarity-gated feature reuse
    EXACT = "exact"  # result-level cache, hits only on identical inputs


class ConfigError(ValueError):
    """Raised with every violated invariant, not just the first."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class Task:
    id: int
    agent_id: int
    input: np.ndarray
    model_id: Model
    workload_gflop: float
    deadline_ms: float
    arrival_ms: float
    input_size_mbit: float

    def __post_init__(self):
        norm = float(np.linalg.norm(self.input))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"task {self.id}: input norm {norm} is not 1")
        if self.workload_gflop <= 0:
            raise ValueError(f"task {self.id}: workload_gflop must be > 0")
        if self.deadline_ms <= 0:
            raise ValueError(f"task {self.id}: deadline_ms must be > 0")


@dataclass
class EdgeNode:
    """A heterogeneous compute node.

    ``link_latency_ms`` and ``bandwidth_mbps`` are indexed by agent id.
    ``queue`` holds ``(task_id, remaining_gflop)`` where the remaining work is
    expressed in nominal-capacity GFLOP (already divided by the efficiency
    factor of the task it belongs to), so ``sum(remaining) / capacity`` is the
    exact FIFO wait.
    """

    id: int
    capacity_gflops: float
    hardware: Hardware
    hosted_models: frozenset
    link_latency_ms: np.ndarray
    bandwidth_mbps: np.ndarray
    cost_per_gflop: float = 1.0
    power_active_w: float = 100.0
    power_idle_w: float = 10.0
    load: float = 0.0
    queue: list = field(default_factory=list)

    def __post_init__(self):
        if not self.hosted_models:
            raise ValueError(f"node {self.id}: hosted_models must be nonempty")
        if not 0.0 <= self.load <= 1.0:
            raise ValueError(f"node {self.id}: load {self.load} outside [0, 1]")
        if self.capacity_gflops <= 0:
            raise ValueError(f"node {self.id}: capacity_gflops must be > 0")

    def queued_gflop(self) -> float:
        return float(sum(w for _, w in self.queue))


# Affinity values; the YOLOv5 row and the BERT/FPGA floor are the published
# anchor points, the rest are filled in to keep the same ordering.
DEFAULT_ALPHA: dict[tuple[Model, Hardware], float] = {
    (Model.YOLOV5, Hardware.GPU): 0.95,
    (Model.YOLOV5, Hardware.NPU): 0.68,
    (Model.YOLOV5, Hardware.CPU): 0.22,
    (Model.YOLOV5, Hardware.FPGA): 0.45,
    (Model.RESNET50, Hardware.GPU): 0.90,
    (Model.RESNET50, Hardware.NPU): 0.80,
    (Model.RESNET50, Hardware.CPU): 0.30,
    (Model.RESNET50, Hardware.FPGA): 0.55,
    (Model.BERT, Hardware.GPU): 0.88,
    (Model.BERT, Hardware.NPU): 0.55,
    (Model.BERT, Hardware.CPU): 0.35,
    (Model.BERT, Hardware.FPGA): 0.10,
}


@dataclass(frozen=True)
class EfficiencyMatrix:
    alpha: Mapping[tuple[Model, Hardware], float] = field(
        default_factory=lambda: dict(DEFAULT_ALPHA)
    )
    default_alpha: float = 0.5

    def __post_init__(self):
        bad = [k for k, v in self.alpha.items() if not 0.1 <= v <= 1.0]
        if bad or not 0.1 <= self.default_alpha <= 1.0:
            raise ValueError(f"efficiency values must lie in [0.1, 1.0]: {bad}")

    def lookup(self, model, hardware) -> float:
        return efficiency_lookup(model, hardware, self)

    def max_alpha(self, model) -> float:
        return max(self.lookup(model, h) for h in Hardware)


def efficiency_lookup(m, h, mat: EfficiencyMatrix) -> float:
    """Stored affinity for ``(m, h)``, or ``mat.default_alpha`` for unknown pairs."""
    try:
        key = (Model(m), Hardware(h))
    except ValueError:
        return mat.default_alpha
    return mat.alpha.get(key, mat.default_alpha)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RewardWeights:
    latency: float = 1.0
    cost: float = 1.0
    cache: float = 1.0
    deadline: float = 1.0


@dataclass(frozen=True)
class EvictionWeights:
    time: float = 0.3  # per second of age
    hits: float = 0.7  # per recorded hit


@dataclass(frozen=True)
class Ablation:
    enable_cache: bool = True
    enable_filter: bool = True
    enable_hw_match: bool = True


def _default_hw_mix() -> dict[str, float]:
    return {"GPU": 0.4, "NPU": 0.2, "CPU": 0.3, "FPGA": 0.1}


@dataclass(frozen=True)
class SimConfig:
    n_agents: int = 150
    n_nodes: int = 25
    seed: int = 0
    theta: float = 0.6
    top_p: int = 3
    cache_capacity: int = 10000
    weights: RewardWeights = field(default_factory=RewardWeights)
    eviction: EvictionWeights = field(default_factory=EvictionWeights)
    dataset_profile: str = "citypersons"
    ablation: Ablation = field(default_factory=Ablation)
    policy: str = PolicyKind.DAOEF_PROXIMITY.value
    cache_mode: str = CacheMode.DELTA.value
    duration_ms: float = 60000.0
    batch_interval_ms: float = 100.0
    tau_eval_ms: float = 3.2
    tau_lsh_ms: float = 0.02
    c_acc: float = 0.106
    model_load_penalty_ms: float = 3500.0
    embedding_dim: int = 128
    default_alpha: float = 0.5
    hardware_mix: Mapping[str, float] = field(default_factory=_default_hw_mix)
    model_coverage: float = 0.6
    load_horizon_ms: float = 200.0
    e_net_wh_per_mbit: float = 0.0002
    gamma: float = 0.95
    td_eta0: float = 1.0
    td_eps0: float = 0.2

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["hardware_mix"] = dict(self.hardware_mix)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SimConfig":
        errors: list[str] = []
        nested = {"weights": RewardWeights, "eviction": EvictionWeights, "ablation": Ablation}
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key not in known:
                errors.append(f"unknown key '{key}'")
                continue
            if key in nested:
                sub = nested[key]
                if not isinstance(value, Mapping):
                    errors.append(f"'{key}' must be an object")
                    continue
                sub_known = {f.name for f in dataclasses.fields(sub)}
                unknown = sorted(set(value) - sub_known)
                errors.extend(f"unknown key '{key}.{u}'" for u in unknown)
                if not unknown:
                    kwargs[key] = sub(**value)
            else:
                kwargs[key] = value
        if errors:
            raise ConfigError(errors)
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        return cls.from_dict(json.loads(text))

    def with_overrides(self, overrides: Mapping[str, Any]) -> "SimConfig":
        """Apply dot-path overrides (``ablation.enable_cache=false``) and re-parse."""
        data = self.to_dict()
        for path, value in overrides.items():
            parts = path.split(".")
            target = data
            for p in parts[:-1]:
                if not isinstance(target.get(p), dict):
                    raise ConfigError([f"unknown key '{path}'"])
                target = target[p]
            if parts[-1] not in target and parts[0] != "hardware_mix":
                raise ConfigError([f"unknown key '{path}'"])
            target[parts[-1]] = value
        return SimConfig.from_dict(data)


ValidatedConfig = SimConfig


def validate_config(cfg: SimConfig) -> ValidatedConfig:
    """Check every invariant; return a normalized copy or raise ConfigError."""
    errors: list[str] = []

    def num(name, value, *, integer=False):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        if integer:
            ok = ok and float(value).is_integer()
        if not ok:
            errors.append(f"{name} must be {'an integer' if integer else 'a number'}")
        return ok

    if num("theta", cfg.theta) and not 0.0 < cfg.theta < 1.0:
        errors.append("theta out of (0,1)")
    if num("top_p", cfg.top_p, integer=True) and cfg.top_p < 1:
        errors.append("top_p must be ≥ 1")
    if num("cache_capacity", cfg.cache_capacity, integer=True) and cfg.cache_capacity < 0:
        errors.append("cache_capacity must be ≥ 0")
    for name in ("n_agents", "n_nodes", "embedding_dim"):
        if num(name, getattr(cfg, name), integer=True) and getattr(cfg, name) < 0:
            errors.append(f"{name} must be ≥ 0")
    if num("seed", cfg.seed, integer=True) and not 0 <= cfg.seed < 2**64:
        errors.append("seed must fit in 64 unsigned bits")
    for name in ("duration_ms", "tau_eval_ms", "tau_lsh_ms", "model_load_penalty_ms",
                 "batch_interval_ms", "load_horizon_ms"):
        if num(name, getattr(cfg, name)) and getattr(cfg, name) <= 0:
            errors.append(f"{name} must be > 0")
    for name in ("c_acc", "e_net_wh_per_mbit", "td_eta0", "td_eps0"):
        if num(name, getattr(cfg, name)) and getattr(cfg, name) < 0:
            errors.append(f"{name} must be ≥ 0")
    if num("gamma", cfg.gamma) and not 0.0 <= cfg.gamma < 1.0:
        errors.append("gamma out of [0,1)")
    if num("default_alpha", cfg.default_alpha) and not 0.1 <= cfg.default_alpha <= 1.0:
        errors.append("default_alpha out of [0.1,1]")
    if num("model_coverage", cfg.model_coverage) and not 0.0 < cfg.model_coverage <= 1.0:
        errors.append("model_coverage out of (0,1]")
    for group in ("weights", "eviction"):
        for f in dataclasses.fields(getattr(cfg, group)):
            v = getattr(getattr(cfg, group), f.name)
            if num(f"{group}.{f.name}", v) and v < 0:
                errors.append(f"{group}.{f.name} must be ≥ 0")
    for f in dataclasses.fields(cfg.ablation):
        if not isinstance(getattr(cfg.ablation, f.name), bool):
            errors.append(f"ablation.{f.name} must be a boolean")
    if cfg.policy not in {p.value for p in PolicyKind}:
        errors.append(f"policy must be one of {[p.value for p in PolicyKind]}")
    if cfg.cache_mode not in {m.value for m in CacheMode}:
        errors.append(f"cache_mode must be one of {[m.value for m in CacheMode]}")

    from .workload import PROFILES  # local import: workload depends on domain

    if cfg.dataset_profile not in PROFILES:
        errors.append(f"dataset_profile must be one of {sorted(PROFILES)}")
    mix = dict(cfg.hardware_mix)
    unknown_hw = sorted(set(mix) - {h.value for h in Hardware})
    if unknown_hw:
        errors.append(f"hardware_mix has unknown hardware {unknown_hw}")
    elif any(not isinstance(v, (int, float)) or v < 0 for v in mix.values()) or sum(mix.values()) <= 0:
        errors.append("hardware_mix weights must be ≥ 0 with a positive sum")

    if errors:
        raise ConfigError(errors)

    fixes = {}
    for name in ("n_agents", "n_nodes"):
        if getattr(cfg, name) < 1:
            log.warning("%s=%s raised to 1", name, getattr(cfg, name))
            fixes[name] = 1
    return dataclasses.replace(cfg, **fixes) if fixes else cfg
