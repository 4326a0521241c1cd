"""Three-tier action-space filter: model availability, hardware affinity, proximity."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import EdgeNode, EfficiencyMatrix, Task, efficiency_lookup


@dataclass(frozen=True)
class FilterTrace:
    tier1_survivors: tuple[int, ...]
    tier2_survivors: tuple[int, ...]
    chosen: int
    fallback_used: bool
    candidates_evaluated: int


def fleet_max_link(nodes: Sequence[EdgeNode]) -> float:
    m = max(float(np.max(n.link_latency_ms)) for n in nodes)
    return m if m > 0 else 1.0


def tier1_model_availability(task: Task, nodes: Sequence[EdgeNode]) -> list[int]:
    return sorted(n.id for n in nodes if task.model_id in n.hosted_models)


def tier2_hardware_affinity(task: Task, survivors: Sequence[int], mat: EfficiencyMatrix, p: int,
                            nodes: Sequence[EdgeNode], by_capacity: bool = False) -> list[int]:
    """Top ``p`` survivors by affinity (or by raw capacity when ``by_capacity``), ties to smaller id."""
    if p < 1:
        raise ValueError("p must be ≥ 1")
    by_id = {n.id: n for n in nodes}
    if by_capacity:
        def key(j):
            return (-by_id[j].capacity_gflops, j)
    else:
        def key(j):
            return (-efficiency_lookup(task.model_id, by_id[j].hardware, mat), j)
    return sorted(sorted(survivors, key=key)[:p])


def tier3_proximity(task: Task, survivors: Sequence[int], nodes: Sequence[EdgeNode],
                    max_link_ms: float | None = None) -> int:
    """argmin of normalized link latency plus load, ties to smaller id."""
    if not survivors:
        raise ValueError("tier 3 needs at least one survivor")
    by_id = {n.id: n for n in nodes}
    scale = max_link_ms if max_link_ms is not None else fleet_max_link(nodes)
    a = task.agent_id
    return min(survivors, key=lambda j: (by_id[j].link_latency_ms[a] / scale + by_id[j].load, j))


def filter_and_select(task: Task, nodes: Sequence[EdgeNode], mat: EfficiencyMatrix, cfg,
                      max_link_ms: float | None = None) -> FilterTrace:
    if not nodes:
        raise ValueError("no nodes")
    all_ids = sorted(n.id for n in nodes)
    tier1 = tier1_model_availability(task, nodes)
    fallback = not tier1
    pool = all_ids if fallback else tier1
    if cfg.ablation.enable_filter:
        tier2 = tier2_hardware_affinity(task, pool, mat, cfg.top_p, nodes,
                                        by_capacity=not cfg.ablation.enable_hw_match)
    else:
        tier2 = all_ids
    chosen = tier3_proximity(task, tier2, nodes, max_link_ms)
    return FilterTrace(tuple(tier1), tuple(tier2), chosen, fallback, len(tier2))


class TierPlan:
    """Precomputed tiers 1-2 for a static fleet; tier 3 is evaluated per task.

    Hosting and hardware do not change during a run, so the first two tiers
    depend only on the model and can be cached.  Produces the same traces as
    :func:`filter_and_select`.
    """

    def __init__(self, nodes: Sequence[EdgeNode], mat: EfficiencyMatrix, cfg):
        self.nodes = list(nodes)
        self.all_ids = tuple(sorted(n.id for n in nodes))
        self.max_link = fleet_max_link(nodes)
        self.enable_filter = cfg.ablation.enable_filter
        self._plans: dict = {}
        self._mat = mat
        self._cfg = cfg
        # link[j, a] normalized, indexed by node id
        order = sorted(self.nodes, key=lambda n: n.id)
        self.link_hat = np.stack([n.link_latency_ms for n in order]) / self.max_link

    def tiers(self, task: Task):
        plan = self._plans.get(task.model_id)
        if plan is None:
            tier1 = tuple(tier1_model_availability(task, self.nodes))
            fallback = not tier1
            pool = self.all_ids if fallback else tier1
            if self.enable_filter:
                tier2 = tuple(tier2_hardware_affinity(
                    task, pool, self._mat, self._cfg.top_p, self.nodes,
                    by_capacity=not self._cfg.ablation.enable_hw_match))
            else:
                tier2 = self.all_ids
            plan = self._plans[task.model_id] = (tier1, tier2, fallback)
        return plan

    def trace(self, task: Task, loads: np.ndarray) -> FilterTrace:
        tier1, tier2, fallback = self.tiers(task)
        cand = np.asarray(tier2)
        score = self.link_hat[cand, task.agent_id] + loads[cand]
        chosen = int(cand[int(np.argmin(score))])  # cand is sorted, so argmin keeps the smaller id
        return FilterTrace(tier1, tier2, chosen, fallback, len(tier2))
