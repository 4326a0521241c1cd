"""Synthetic task streams with controllable similarity, dataset presets, and fleet generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import EdgeNode, Hardware, Model, Task

MODELS = tuple(Model)
HARDWARE = tuple(Hardware)


@dataclass(frozen=True)
class DatasetProfile:
    """Similarity and arrival statistics standing in for a real dataset.

    Temporal structure per agent: each new input is an exact repeat of the
    previous one with probability ``repeat_prob``, a fresh scene with
    probability ``cut_prob``, and otherwise an AR(1) drift of the noise
    component with coefficient ``rho``.
    """

    name: str
    target_mean_similarity: float
    n_agents_default: int
    model_mix: dict = field(default_factory=dict)
    workload_jitter: float = 0.4
    deadline_ms: tuple = (100.0, 100.0)
    input_size_mbit: tuple = (1.0, 3.0)
    arrival_rate_hz: float = 0.1
    repeat_prob: float = 0.4
    cut_prob: float = 0.05
    rho: float = 0.995

    def __post_init__(self):
        if not 0.0 < self.target_mean_similarity < 1.0:
            raise ValueError("target similarity must be in (0,1)")
        for lo, hi in (self.deadline_ms, self.input_size_mbit):
            if not 0 < lo <= hi:
                raise ValueError("ranges must be positive and ordered")
        if self.arrival_rate_hz <= 0:
            raise ValueError("arrival rate must be > 0")
        if abs(sum(self.model_mix.values()) - 1.0) > 1e-9:
            raise ValueError("model mix must sum to 1")

    @property
    def sigma_noise(self) -> float:
        return noise_for_similarity(self.target_mean_similarity)


# Mean per-inference workload before jitter.
BASE_WORKLOAD_GFLOP = {Model.YOLOV5: 25.0, Model.RESNET50: 12.0, Model.BERT: 22.0}

PROFILES: dict[str, DatasetProfile] = {
    "citypersons": DatasetProfile(
        "citypersons", 0.65, 200,
        {Model.YOLOV5: 0.6, Model.RESNET50: 0.3, Model.BERT: 0.1},
        repeat_prob=0.45, cut_prob=0.08),
    "nuscenes": DatasetProfile(
        "nuscenes", 0.45, 150,
        {Model.YOLOV5: 0.5, Model.RESNET50: 0.4, Model.BERT: 0.1},
        repeat_prob=0.30, cut_prob=0.30),
    "edge_iiotset": DatasetProfile(
        "edge_iiotset", 0.60, 100,
        {Model.YOLOV5: 0.2, Model.RESNET50: 0.3, Model.BERT: 0.5},
        input_size_mbit=(0.2, 0.8), repeat_prob=0.40, cut_prob=0.14),
    "visdrone": DatasetProfile(
        "visdrone", 0.48, 120,
        {Model.YOLOV5: 0.7, Model.RESNET50: 0.2, Model.BERT: 0.1},
        repeat_prob=0.35, cut_prob=0.22),
}


@dataclass(frozen=True)
class HardwareClass:
    capacity_gflops: float
    power_active_w: float
    power_idle_w: float


HARDWARE_CLASSES = {
    Hardware.GPU: HardwareClass(200.0, 60.0, 4.0),
    Hardware.NPU: HardwareClass(220.0, 30.0, 2.0),
    Hardware.CPU: HardwareClass(133.0, 65.0, 5.0),
    Hardware.FPGA: HardwareClass(280.0, 25.0, 2.0),
}
CAPACITY_JITTER = 0.1
LINK_LATENCY_MS = (2.0, 15.0)
BANDWIDTH_MBPS = (50.0, 200.0)


def noise_for_similarity(s: float) -> float:
    """Noise scale giving expected cosine ``s`` between two noisy copies of one base."""
    return math.sqrt(1.0 / s - 1.0)


def similarity(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise ValueError("similarity undefined for a zero vector")
    return float(np.clip(x @ y / (nx * ny), -1.0, 1.0))


def hardware_counts(n_nodes: int, mix: dict) -> dict[Hardware, int]:
    """Largest-remainder apportionment; leftover seats go to larger remainders, then enum order."""
    weights = np.array([float(mix.get(h.value, 0.0)) for h in HARDWARE])
    quota = n_nodes * weights / weights.sum()
    base = np.floor(quota).astype(int)
    left = n_nodes - base.sum()
    rem = np.round(quota - base, 9)  # so 25 * 0.3 and 25 * 0.1 tie exactly
    order = sorted(range(len(HARDWARE)), key=lambda i: (-rem[i], i))
    for i in order[:left]:
        base[i] += 1
    return {h: int(c) for h, c in zip(HARDWARE, base)}


def agent_clusters(n_agents: int) -> np.ndarray:
    """Contiguous blocks of agents, ``n_agents // 10`` clusters (at least one)."""
    k = max(1, n_agents // 10)
    return (np.arange(n_agents) * k) // max(n_agents, 1)


def generate_fleet(cfg, rng: np.random.Generator) -> list[EdgeNode]:
    k = max(1, int(cfg.n_nodes))
    n_agents = max(1, int(cfg.n_agents))
    counts = hardware_counts(k, cfg.hardware_mix)
    hw = [h for h in HARDWARE for _ in range(counts[h])]
    hw = [hw[i] for i in rng.permutation(k)]
    caps = np.array([HARDWARE_CLASSES[h].capacity_gflops for h in hw])
    caps = caps * rng.uniform(1 - CAPACITY_JITTER, 1 + CAPACITY_JITTER, k)
    hosted = [set() for _ in range(k)]
    if k == 1:
        hosted[0] = set(MODELS)
    else:
        per_model = math.ceil(cfg.model_coverage * k)
        for m in MODELS:
            for j in rng.choice(k, size=per_model, replace=False):
                hosted[j].add(m)
        for j in range(k):
            if not hosted[j]:
                hosted[j].add(MODELS[int(rng.integers(len(MODELS)))])
    link = rng.uniform(*LINK_LATENCY_MS, (k, n_agents))
    bw = rng.uniform(*BANDWIDTH_MBPS, (k, n_agents))
    nodes = []
    for j in range(k):
        spec = HARDWARE_CLASSES[hw[j]]
        nodes.append(EdgeNode(
            id=j, capacity_gflops=float(caps[j]), hardware=hw[j], hosted_models=frozenset(hosted[j]),
            link_latency_ms=link[j], bandwidth_mbps=bw[j], cost_per_gflop=1.0,
            power_active_w=spec.power_active_w, power_idle_w=spec.power_idle_w))
    return nodes


def generate_tasks(profile: DatasetProfile | str, n_agents: int, duration_ms: float,
                   rng: np.random.Generator, dim: int = 128) -> list[Task]:
    """Time-ordered task stream; ids follow arrival order (agent id breaks ties)."""
    if duration_ms <= 0:
        raise ValueError("duration must be > 0")
    prof = PROFILES[profile] if isinstance(profile, str) else profile
    sigma = prof.sigma_noise
    clusters = agent_clusters(n_agents)
    n_clusters = int(clusters.max()) + 1 if n_agents else 0
    bases = rng.standard_normal((n_clusters, dim))
    bases /= np.linalg.norm(bases, axis=1, keepdims=True)
    models = list(prof.model_mix)
    probs = np.array([prof.model_mix[m] for m in models])
    agent_model = [models[i] for i in rng.choice(len(models), size=n_agents, p=probs)]
    lo_d, hi_d = prof.deadline_ms
    lo_s, hi_s = prof.input_size_mbit
    jit = prof.workload_jitter
    ar = math.sqrt(1.0 - prof.rho ** 2)
    scale = 1.0 / math.sqrt(dim)

    rows = []
    for a in range(n_agents):
        # Poisson arrivals: draw a generous batch of gaps, extend if needed.
        mean_gap = 1000.0 / prof.arrival_rate_hz
        n_exp = int(duration_ms / mean_gap) + 1
        gaps = rng.exponential(mean_gap, n_exp + 4 * int(math.sqrt(n_exp)) + 8)
        times = np.cumsum(gaps)
        while times[-1] < duration_ms:
            times = np.concatenate([times, times[-1] + np.cumsum(rng.exponential(mean_gap, n_exp + 8))])
        times = times[times < duration_ms]
        n = len(times)
        if n == 0:
            continue
        kinds = rng.random(n)
        fresh = rng.standard_normal((n, dim)) * scale
        m = agent_model[a]
        w = BASE_WORKLOAD_GFLOP[m] * rng.uniform(1 - jit, 1 + jit, n)
        dl = rng.uniform(lo_d, hi_d, n)
        sz = rng.uniform(lo_s, hi_s, n)
        base = bases[clusters[a]]
        noise = fresh[0]
        x = None
        for i in range(n):
            if i > 0:
                if kinds[i] < prof.repeat_prob:
                    rows.append((times[i], a, x, m, w[i], dl[i], sz[i]))
                    continue
                if kinds[i] < prof.repeat_prob + prof.cut_prob:
                    noise = fresh[i]
                else:
                    noise = prof.rho * noise + ar * fresh[i]
            v = base + sigma * noise
            x = v / np.linalg.norm(v)
            rows.append((times[i], a, x, m, w[i], dl[i], sz[i]))
    rows.sort(key=lambda r: (r[0], r[1]))
    return [Task(id=i, agent_id=a, input=x, model_id=m, workload_gflop=float(w), deadline_ms=float(d),
                 arrival_ms=float(t), input_size_mbit=float(s))
            for i, (t, a, x, m, w, d, s) in enumerate(rows)]


def neighbor_similarities(tasks: list[Task], n_agents: int, n_pairs: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Cosine similarities of random task pairs from distinct agents in the same cluster."""
    clusters = agent_clusters(n_agents)
    by_cluster: dict[int, list[Task]] = {}
    for t in tasks:
        by_cluster.setdefault(int(clusters[t.agent_id]), []).append(t)
    groups = [g for g in by_cluster.values() if len({t.agent_id for t in g}) > 1]
    if not groups:
        raise ValueError("no cluster has two agents with tasks")
    sims = []
    while len(sims) < n_pairs:
        g = groups[int(rng.integers(len(groups)))]
        i, j = rng.integers(len(g), size=2)
        if g[i].agent_id == g[j].agent_id:
            continue
        sims.append(float(g[i].input @ g[j].input))
    return np.array(sims)
