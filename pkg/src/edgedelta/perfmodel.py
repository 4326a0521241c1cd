"""Closed-form latency, cost, decision-latency, and energy models."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import ConfigError, EdgeNode, Task

J_PER_KWH = 3.6e6
J_PER_WH = 3600.0


@dataclass(frozen=True)
class LatencyBreakdown:
    transmit_ms: float = 0.0
    queue_ms: float = 0.0
    compute_ms: float = 0.0
    orchestration_ms: float = 0.0
    cache_lookup_ms: float = 0.0
    load_penalty_ms: float = 0.0

    def __post_init__(self):
        for name in ("transmit_ms", "queue_ms", "compute_ms", "orchestration_ms",
                     "cache_lookup_ms", "load_penalty_ms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} is negative: {getattr(self, name)}")

    @property
    def total_ms(self) -> float:
        return (self.transmit_ms + self.queue_ms + self.compute_ms + self.orchestration_ms
                + self.cache_lookup_ms + self.load_penalty_ms)


def transmit_ms(size_mbit: float, bandwidth_mbps: float, link_ms: float = 0.0) -> float:
    if bandwidth_mbps <= 0:
        raise ConfigError(["bandwidth must be > 0"])
    return link_ms + 1000.0 * size_mbit / bandwidth_mbps


def compute_ms(effective_workload_gflop: float, capacity_gflops: float, alpha: float) -> float:
    if capacity_gflops <= 0:
        raise ConfigError(["capacity_gflops must be > 0"])
    return 1000.0 * effective_workload_gflop / (capacity_gflops * alpha)


def total_latency(task: Task, node: EdgeNode, effective_workload_gflop: float,
                  alpha: float) -> LatencyBreakdown:
    """Transmission + queueing + computation for placing ``task`` on ``node`` now.

    Transmission includes the agent-node link latency.  The queue term is the
    work already queued on the node (in capacity-normalized GFLOP) divided by
    capacity.
    """
    if not 0.1 <= alpha <= 1.0:
        raise ValueError(f"alpha {alpha} outside [0.1, 1.0]")
    if effective_workload_gflop < 0:
        raise ValueError("effective workload must be ≥ 0")
    if node.capacity_gflops <= 0:
        raise ConfigError([f"node {node.id}: capacity_gflops must be > 0"])
    a = task.agent_id
    return LatencyBreakdown(
        transmit_ms=transmit_ms(task.input_size_mbit, float(node.bandwidth_mbps[a]),
                                float(node.link_latency_ms[a])),
        queue_ms=1000.0 * node.queued_gflop() / node.capacity_gflops,
        compute_ms=compute_ms(effective_workload_gflop, node.capacity_gflops, alpha),
    )


def task_cost(effective_workload_gflop: float, node: EdgeNode, alpha: float) -> float:
    """Monetary cost ``beta * w / (c * alpha)``."""
    if not 0.1 <= alpha <= 1.0:
        raise ValueError(f"alpha {alpha} outside [0.1, 1.0]")
    return node.cost_per_gflop * effective_workload_gflop / (node.capacity_gflops * alpha)


def decision_latency(n_tasks: int, candidates_evaluated: int, cache_lookups: int,
                     cache_size: int, cfg) -> float:
    """Modeled orchestrator time for one decision cycle, in ms.

    ``n_tasks`` is accepted for bookkeeping; the cost is carried entirely by the
    candidate and lookup counts.
    """
    if min(n_tasks, candidates_evaluated, cache_lookups, cache_size) < 0:
        raise ValueError("counts must be ≥ 0")
    lsh = cfg.tau_lsh_ms * cache_lookups * math.log2(1 + cache_size) if cache_lookups else 0.0
    return cfg.tau_eval_ms * candidates_evaluated + lsh


@dataclass(frozen=True)
class EnergyBreakdown:
    compute_kwh: float
    network_kwh: float
    idle_kwh: float

    @property
    def total_kwh(self) -> float:
        return self.compute_kwh + self.network_kwh + self.idle_kwh


def energy_breakdown(active_s, power_active_w, idle_s, power_idle_w, mbit: float,
                     e_net_wh_per_mbit: float) -> EnergyBreakdown:
    active_s, idle_s = np.asarray(active_s, float), np.asarray(idle_s, float)
    if (active_s < 0).any() or (idle_s < 0).any() or mbit < 0:
        raise ValueError("energy inputs must be nonnegative")
    return EnergyBreakdown(
        compute_kwh=float(np.dot(power_active_w, active_s)) / J_PER_KWH,
        network_kwh=e_net_wh_per_mbit * mbit * J_PER_WH / J_PER_KWH,
        idle_kwh=float(np.dot(power_idle_w, idle_s)) / J_PER_KWH,
    )


def energy(active_s, power_active_w, idle_s, power_idle_w, mbit: float,
           e_net_wh_per_mbit: float) -> float:
    """Total run energy in kWh."""
    return energy_breakdown(active_s, power_active_w, idle_s, power_idle_w, mbit,
                            e_net_wh_per_mbit).total_kwh
