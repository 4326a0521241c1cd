"""Deterministic discrete-event engine binding workload, cache, filter, policy, and cost models.

Decisions are made in cycles: every ``batch_interval_ms`` the orchestrator
takes all tasks that arrived since the previous cycle, queries the cache,
filters candidates, and picks nodes one task at a time (later tasks see the
load committed by earlier ones).  Each task is dispatched once the modeled
evaluation time of itself and the tasks ahead of it in the cycle has elapsed.  Nodes serve tasks FIFO in order of
arrival at the node.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import perfmodel
from .cache import DeltaCache
from .domain import (CacheMode, EdgeNode, EfficiencyMatrix, PolicyKind, SimConfig, Task,
                     validate_config)
from .lsh import make_projections
from .policy import CandidateView, GreedyState, TdLearner, reward, select, td_update
from .tierfilter import TierPlan
from .workload import MODELS, PROFILES, generate_fleet, generate_tasks

SCHEMA_VERSION = 1


class EventKind(enum.IntEnum):
    # Value is the tie-break rank at equal timestamps.
    ARRIVAL = 0
    COMPLETION = 1
    NODE_ARRIVAL = 2
    DECISION_BATCH = 3


TASK_COLUMNS = (
    "task_id", "agent_id", "model", "node", "arrival_ms", "dispatch_ms", "finish_ms",
    "transmit_ms", "queue_ms", "compute_ms", "orchestration_ms", "cache_lookup_ms",
    "load_penalty_ms", "latency_ms", "deadline_ms", "deadline_met", "hit", "similarity",
    "workload_gflop", "effective_gflop", "alpha", "cost", "accuracy_penalty",
    "candidates_evaluated", "fallback_used", "input_size_mbit",
)


@dataclass
class SimMetrics:
    """Per-task columns plus run-level aggregates (all recomputable from the columns)."""

    columns: dict[str, np.ndarray]
    duration_ms: float
    makespan_ms: float
    cycle_decision_ms: np.ndarray
    node_active_s: np.ndarray
    node_power_active_w: np.ndarray
    node_power_idle_w: np.ndarray
    e_net_wh_per_mbit: float
    cache_queries: int = 0
    cache_hits: int = 0
    cache_evictions: int = 0
    energy: perfmodel.EnergyBreakdown | None = field(default=None)

    def __post_init__(self):
        if self.energy is None:
            idle = np.maximum(0.0, self.makespan_ms / 1000.0 - self.node_active_s)
            self.energy = perfmodel.energy_breakdown(
                self.node_active_s, self.node_power_active_w, idle, self.node_power_idle_w,
                float(np.sum(self.columns["input_size_mbit"])), self.e_net_wh_per_mbit)

    @property
    def n_tasks(self) -> int:
        return len(self.columns["task_id"])

    def _mean(self, name: str) -> float:
        col = self.columns[name]
        return float(np.mean(col)) if len(col) else 0.0

    @property
    def mean_latency_ms(self) -> float:
        return self._mean("latency_ms")

    @property
    def p95_latency_ms(self) -> float:
        col = self.columns["latency_ms"]
        return float(np.percentile(col, 95)) if len(col) else 0.0

    @property
    def throughput_tps(self) -> float:
        """Fleet task completions per second of simulated makespan."""
        return self.n_tasks / (self.makespan_ms / 1000.0) if self.makespan_ms > 0 else 0.0

    @property
    def deadline_satisfaction(self) -> float | None:
        return deadline_satisfaction(self)

    @property
    def hit_rate(self) -> float:
        return self.cache_hits / self.cache_queries if self.cache_queries else 0.0

    @property
    def total_energy_kwh(self) -> float:
        return self.energy.total_kwh

    @property
    def total_cost(self) -> float:
        return float(np.sum(self.columns["cost"]))

    @property
    def mean_decision_ms(self) -> float:
        """Modeled orchestrator latency per decision cycle."""
        c = self.cycle_decision_ms
        return float(np.mean(c)) if len(c) else 0.0

    @property
    def savings_fraction(self) -> float:
        """Share of requested compute avoided by cache reuse."""
        w = self.columns["workload_gflop"]
        total = float(np.sum(w))
        return float(np.sum(w - self.columns["effective_gflop"])) / total if total else 0.0

    @property
    def mean_accuracy_penalty(self) -> float:
        return self._mean("accuracy_penalty")

    def breakdown_means(self) -> dict[str, float]:
        return {k: self._mean(k) for k in ("transmit_ms", "queue_ms", "compute_ms",
                                           "orchestration_ms", "cache_lookup_ms",
                                           "load_penalty_ms")}

    def aggregates(self) -> dict[str, float]:
        agg = {
            "n_tasks": float(self.n_tasks),
            "mean_latency_ms": self.mean_latency_ms,
            "p95_latency_ms": self.p95_latency_ms,
            "throughput_tps": self.throughput_tps,
            "deadline_satisfaction": self.deadline_satisfaction or 0.0,
            "hit_rate": self.hit_rate,
            "energy_kwh": self.total_energy_kwh,
            "compute_energy_kwh": self.energy.compute_kwh,
            "network_energy_kwh": self.energy.network_kwh,
            "idle_energy_kwh": self.energy.idle_kwh,
            "total_cost": self.total_cost,
            "mean_decision_ms": self.mean_decision_ms,
            "savings_fraction": self.savings_fraction,
            "mean_accuracy_penalty": self.mean_accuracy_penalty,
        }
        agg.update({f"mean_{k}": v for k, v in self.breakdown_means().items()})
        return agg


def deadline_satisfaction(metrics: SimMetrics) -> float | None:
    n = metrics.n_tasks
    return float(np.sum(metrics.columns["deadline_met"])) / n if n else None


def synergy_ratio(full_reduction: float, single_reductions) -> float:
    singles = list(single_reductions)
    if not singles:
        raise ValueError("need at least one single-mechanism reduction")
    return full_reduction / (sum(singles) / len(singles))


class _Engine:
    def __init__(self, cfg: SimConfig, tasks: list[Task] | None, nodes: list[EdgeNode] | None):
        self.cfg = cfg
        ss = np.random.SeedSequence(cfg.seed)
        fleet_ss, task_ss, proj_ss, pol_ss = ss.spawn(4)
        self.nodes = nodes if nodes is not None else generate_fleet(cfg, np.random.default_rng(fleet_ss))
        self.tasks = tasks if tasks is not None else generate_tasks(
            PROFILES[cfg.dataset_profile], cfg.n_agents, cfg.duration_ms,
            np.random.default_rng(task_ss), cfg.embedding_dim)
        self.rng = np.random.default_rng(pol_ss)
        self.mat = EfficiencyMatrix(default_alpha=cfg.default_alpha)
        self.abl = cfg.ablation
        self.policy = PolicyKind(cfg.policy)
        k = len(self.nodes)
        if sorted(n.id for n in self.nodes) != list(range(k)):
            raise ValueError("node ids must be 0..K-1")
        self.nodes.sort(key=lambda n: n.id)
        self.K = k
        self.caps = np.array([n.capacity_gflops for n in self.nodes])
        self.beta = np.array([n.cost_per_gflop for n in self.nodes])
        self.link = np.stack([n.link_latency_ms for n in self.nodes])
        self.bw = np.stack([n.bandwidth_mbps for n in self.nodes])
        self.alpha = {m: np.array([self.mat.lookup(m, n.hardware) for n in self.nodes]) for m in MODELS}
        self.hosted = {m: np.array([m in n.hosted_models for n in self.nodes]) for m in MODELS}
        self.plan = TierPlan(self.nodes, self.mat, cfg)
        self.link_hat = self.plan.link_hat
        self.cache = None
        if self.abl.enable_cache and cfg.cache_capacity > 0:
            proj = make_projections(cfg.embedding_dim, np.random.default_rng(proj_ss))
            self.cache = DeltaCache(theta=cfg.theta, capacity=cfg.cache_capacity,
                                    dim=cfg.embedding_dim, projections=proj,
                                    w_time=cfg.eviction.time, w_hits=cfg.eviction.hits,
                                    c_acc=cfg.c_acc, mode=CacheMode(cfg.cache_mode))
        self.learner = None
        if self.policy is PolicyKind.TD_LEARNER:
            self.learner = TdLearner(eta0=cfg.td_eta0, eps0=cfg.td_eps0, gamma=cfg.gamma)
        self.greedy = GreedyState()
        # node state
        self.busy_until = np.zeros(k)
        self.pending_ms = np.zeros(k)
        self.pending_n = np.zeros(k, dtype=np.int64)
        self.in_service_n = np.zeros(k, dtype=np.int64)
        self.active_s = np.zeros(k)
        self.cost_sum = 0.0
        self.cost_n = 0

    # -- state snapshots -------------------------------------------------

    def backlog_ms(self, now: float) -> np.ndarray:
        return np.maximum(0.0, self.busy_until - now) + self.pending_ms

    def loads(self, now: float) -> np.ndarray:
        return np.minimum(1.0, self.backlog_ms(now) / self.cfg.load_horizon_ms)

    def view(self, task: Task, cand: np.ndarray, loads: np.ndarray) -> CandidateView:
        return CandidateView(
            ids=cand, alpha=self.alpha[task.model_id][cand],
            link_hat=self.link_hat[cand, task.agent_id], load=loads[cand],
            queue_depth=(self.pending_n + self.in_service_n)[cand].astype(float),
            hosted=self.hosted[task.model_id][cand].astype(float))

    # -- placement ---------------------------------------------------------

    def place(self, task: Task, w_eff: float, now: float, loads: np.ndarray):
        """Return (node, candidates_evaluated, fallback_used, features of the choice)."""
        trace = self.plan.trace(task, loads)
        cand = np.asarray(trace.tier2_survivors)
        phi = None
        if self.policy is PolicyKind.DAOEF_PROXIMITY:
            if self.abl.enable_filter:
                return trace.chosen, trace.candidates_evaluated, trace.fallback_used, None
            return self.exhaustive(task, w_eff, now), self.K, trace.fallback_used, None
        view = self.view(task, cand, loads)
        j = select(self.policy, view, self.rng, learner=self.learner, greedy=self.greedy)
        if self.learner is not None:
            phi = self.learner.featurize(view.features())[int(np.searchsorted(cand, j))]
        n_eval = 1 if self.policy is PolicyKind.RANDOM else len(cand)
        return j, n_eval, trace.fallback_used, phi

    def exhaustive(self, task: Task, w_eff: float, now: float) -> int:
        """Estimated-completion argmin over every node (used when filtering is off)."""
        a = task.agent_id
        a_hat = self.alpha[task.model_id] if self.abl.enable_hw_match else 1.0
        est = (self.link[:, a] + 1000.0 * task.input_size_mbit / self.bw[:, a]
               + self.backlog_ms(now) + 1000.0 * w_eff / (self.caps * a_hat)
               + self.cfg.model_load_penalty_ms * ~self.hosted[task.model_id])
        return int(np.argmin(est))

    # -- main loop -------------------------------------------------------

    def run(self) -> SimMetrics:
        cfg = self.cfg
        n = len(self.tasks)
        col = {c: np.zeros(n) for c in TASK_COLUMNS}
        col["model"] = np.empty(n, dtype=object)
        heap: list = []
        seq = 0

        def push(t, kind, payload):
            nonlocal seq
            heapq.heappush(heap, (t, int(kind), seq, payload))
            seq += 1

        for i, t in enumerate(self.tasks):
            push(t.arrival_ms, EventKind.ARRIVAL, i)
        dt = cfg.batch_interval_ms
        last_arrival = self.tasks[-1].arrival_ms if n else 0.0
        n_ticks = max(1, math.ceil(max(cfg.duration_ms, last_arrival) / dt))
        push(dt, EventKind.DECISION_BATCH, 1)
        pending: list[int] = []
        cycles: list[float] = []
        task_phi: dict[int, np.ndarray] = {}
        makespan = cfg.duration_ms

        while heap:
            now, kind, _, payload = heapq.heappop(heap)
            if kind == EventKind.ARRIVAL:
                pending.append(payload)
            elif kind == EventKind.DECISION_BATCH:
                cycles.append(self.decide(now, pending, col, task_phi, push))
                pending = []
                if payload < n_ticks:
                    push(now + dt, EventKind.DECISION_BATCH, payload + 1)
            elif kind == EventKind.NODE_ARRIVAL:
                i = payload
                j = int(col["node"][i])
                comp = col["compute_ms"][i]
                start = max(now, self.busy_until[j])
                col["queue_ms"][i] = start - now
                finish = start + comp
                self.busy_until[j] = finish
                self.pending_ms[j] -= comp
                self.pending_n[j] -= 1
                self.in_service_n[j] += 1
                col["finish_ms"][i] = finish
                push(finish, EventKind.COMPLETION, i)
            else:  # COMPLETION
                i = payload
                j = int(col["node"][i])
                self.in_service_n[j] -= 1
                makespan = max(makespan, now)
                t = self.tasks[i]
                lat = now - t.arrival_ms + col["load_penalty_ms"][i]
                col["latency_ms"][i] = lat
                col["deadline_met"][i] = float(lat <= t.deadline_ms)
                if self.learner is not None:
                    self.learn(t, i, col, task_phi.pop(i), now)

        np.maximum(self.pending_ms, 0.0, out=self.pending_ms)
        c = self.cache
        return SimMetrics(
            columns=col, duration_ms=cfg.duration_ms, makespan_ms=makespan,
            cycle_decision_ms=np.array(cycles), node_active_s=self.active_s.copy(),
            node_power_active_w=np.array([nd.power_active_w for nd in self.nodes]),
            node_power_idle_w=np.array([nd.power_idle_w for nd in self.nodes]),
            e_net_wh_per_mbit=cfg.e_net_wh_per_mbit,
            cache_queries=c.queries if c else 0, cache_hits=c.hits if c else 0,
            cache_evictions=c.evictions if c else 0)

    def decide(self, now, batch, col, task_phi, push) -> float:
        cfg = self.cfg
        if not batch:
            return 0.0
        batch.sort()
        cache_size = len(self.cache) if self.cache is not None else 0
        loads = self.loads(now)
        n_eval = 0
        lookups = 0
        placed = []
        for i in batch:
            t = self.tasks[i]
            w_eff, hit, sim, pen = t.workload_gflop, False, 0.0, 0.0
            if self.cache is not None:
                lookups += 1
                d = self.cache.query(t, now)
                if d.hit:
                    w_eff, hit, sim, pen = d.delta_workload_gflop, True, d.similarity, d.accuracy_penalty
                else:
                    sim = d.similarity
                    self.cache.admit(t, now)
            j, n_c, fallback, phi = self.place(t, w_eff, now, loads)
            n_eval += n_c
            alpha = float(self.alpha[t.model_id][j])
            comp = perfmodel.compute_ms(w_eff, self.caps[j], alpha)
            self.pending_ms[j] += comp
            self.pending_n[j] += 1
            self.active_s[j] += comp / 1000.0
            loads[j] = min(1.0, (max(0.0, self.busy_until[j] - now) + self.pending_ms[j])
                           / cfg.load_horizon_ms)
            cost = self.beta[j] * w_eff / (self.caps[j] * alpha)
            self.cost_sum += cost
            self.cost_n += 1
            if phi is not None:
                task_phi[i] = phi
            col["task_id"][i] = t.id
            col["agent_id"][i] = t.agent_id
            col["model"][i] = t.model_id.value
            col["node"][i] = j
            col["arrival_ms"][i] = t.arrival_ms
            col["compute_ms"][i] = comp
            col["load_penalty_ms"][i] = 0.0 if self.hosted[t.model_id][j] else cfg.model_load_penalty_ms
            col["deadline_ms"][i] = t.deadline_ms
            col["hit"][i] = float(hit)
            col["similarity"][i] = sim
            col["workload_gflop"][i] = t.workload_gflop
            col["effective_gflop"][i] = w_eff
            col["alpha"][i] = alpha
            col["cost"][i] = cost
            col["accuracy_penalty"][i] = pen
            col["candidates_evaluated"][i] = n_c
            col["fallback_used"][i] = float(fallback)
            col["input_size_mbit"][i] = t.input_size_mbit
            placed.append(i)
        # Tasks are decided one after another and each leaves as soon as it is
        # decided, so a task waits for its own and all earlier evaluations.
        per_lookup = perfmodel.decision_latency(1, 0, 1, cache_size, cfg) if lookups else 0.0
        cum_eval = 0.0
        cum_lsh = 0.0
        for i in placed:
            t = self.tasks[i]
            j = int(col["node"][i])
            cum_eval += cfg.tau_eval_ms * col["candidates_evaluated"][i]
            if self.cache is not None:
                cum_lsh += per_lookup
            dispatch = now + cum_eval + cum_lsh
            tx = perfmodel.transmit_ms(t.input_size_mbit, self.bw[j, t.agent_id], self.link[j, t.agent_id])
            col["dispatch_ms"][i] = dispatch
            col["transmit_ms"][i] = tx
            col["orchestration_ms"][i] = (now - t.arrival_ms) + cum_eval
            col["cache_lookup_ms"][i] = cum_lsh
            push(dispatch + tx, EventKind.NODE_ARRIVAL, i)
        d_total = perfmodel.decision_latency(len(batch), n_eval, lookups, cache_size, cfg)
        return d_total

    def learn(self, t: Task, i: int, col, phi, now: float) -> None:
        mean_cost = self.cost_sum / self.cost_n if self.cost_n else 0.0
        r = reward(col["latency_ms"][i], t.deadline_ms, col["cost"][i], col["hit"][i],
                   self.cfg.weights, mean_cost=mean_cost).total
        trace = self.plan.trace(t, self.loads(now))
        nxt = self.learner.featurize(self.view(t, np.asarray(trace.tier2_survivors), self.loads(now)).features())
        td_update(self.learner, phi, r, nxt)


def run(cfg: SimConfig, tasks: list[Task] | None = None, nodes: list[EdgeNode] | None = None) -> SimMetrics:
    """Simulate one configuration; ``tasks``/``nodes`` override the seeded generators."""
    cfg = validate_config(cfg)
    return _Engine(cfg, tasks, nodes).run()


def metrics_rows(m: SimMetrics) -> list[dict]:
    """Per-task rows followed by one aggregate row, for CSV export."""
    rows = []
    for i in range(m.n_tasks):
        row = {"schema_version": SCHEMA_VERSION, "row_type": "task"}
        for c in TASK_COLUMNS:
            v = m.columns[c][i]
            row[c] = v if isinstance(v, str) else repr(float(v))
        rows.append(row)
    agg = {"schema_version": SCHEMA_VERSION, "row_type": "aggregate"}
    agg.update({k: repr(float(v)) for k, v in m.aggregates().items()})
    rows.append(agg)
    return rows
