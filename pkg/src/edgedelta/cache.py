"""Delta-aware feature cache with threshold-gated reuse and hybrid recency/frequency eviction."""

from __future__ import annotations

import enum
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from . import kernels
from .domain import CacheMode, Model, Task
from .lsh import LshIndex


class DecisionKind(str, enum.Enum):
    HIT = "HIT"
    MISS = "MISS"


@dataclass
class CacheEntry:
    id: int
    input: np.ndarray
    model_id: Model
    output_token: int
    feature_token: int
    insert_time_ms: float
    last_hit_time_ms: float
    hit_count: int = 0


@dataclass(frozen=True)
class CacheDecision:
    kind: DecisionKind
    similarity: float
    matched_id: int | None
    delta_workload_gflop: float
    accuracy_penalty: float

    @property
    def hit(self) -> bool:
        return self.kind is DecisionKind.HIT


def eviction_score(entry: CacheEntry, now_ms: float, w_time: float, w_hits: float) -> float:
    """``w_time * age_s - w_hits * hit_count``; larger means evict sooner."""
    if now_ms < entry.insert_time_ms:
        raise ValueError("now precedes the entry's insert time")
    return w_time * (now_ms - entry.insert_time_ms) / 1000.0 - w_hits * entry.hit_count


class DeltaCache:
    """Per-model LSH indexes under one global capacity.

    In ``CacheMode.EXACT`` the cache degrades to a result cache keyed on the
    raw input bytes with LRU eviction; only identical inputs hit.
    """

    def __init__(self, *, theta: float, capacity: int, dim: int, projections: np.ndarray,
                 w_time: float = 0.3, w_hits: float = 0.7, c_acc: float = 0.106,
                 mode: CacheMode | str = CacheMode.DELTA):
        self.theta = theta
        self.capacity = int(capacity)
        self.dim = dim
        self.w_time = w_time
        self.w_hits = w_hits
        self.c_acc = c_acc
        self.mode = CacheMode(mode)
        self._projections = projections
        self.indexes: dict[Model, LshIndex] = {}
        self.entries: dict[int, CacheEntry] = {}
        self._exact: OrderedDict = OrderedDict()
        # Parallel arrays for the eviction kernel, one slot per live entry.
        n = self.capacity + 1
        self._ins_s = np.zeros(n)
        self._hits = np.zeros(n, dtype=np.int64)
        self._ids = np.zeros(n, dtype=np.int64)
        self._alive = np.zeros(n, dtype=np.uint8)
        self._slot: dict[int, int] = {}
        self._free = list(range(n - 1, -1, -1))
        self.queries = 0
        self.hits = 0
        self.evictions = 0
        self.candidates_examined = 0

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def enabled(self) -> bool:
        return self.capacity > 0

    def _index(self, model: Model) -> LshIndex:
        idx = self.indexes.get(model)
        if idx is None:
            idx = self.indexes[model] = LshIndex(self.dim, self._projections)
        return idx

    def _best(self, task: Task) -> tuple[int, float] | None:
        if self.mode is CacheMode.EXACT:
            eid = self._exact.get((task.model_id, task.input.tobytes()))
            return None if eid is None else (eid, 1.0)
        idx = self.indexes.get(task.model_id)
        if idx is None:
            return None
        found = idx.lookup(task.input)
        self.candidates_examined += idx.last_candidates
        return found

    def query(self, task: Task, now_ms: float) -> CacheDecision:
        self.queries += 1
        w = task.workload_gflop
        found = self._best(task) if self.entries else None
        if found is None:
            return CacheDecision(DecisionKind.MISS, 0.0, None, w, 0.0)
        eid, s = found
        s = min(1.0, max(-1.0, s))
        if not s > self.theta:
            return CacheDecision(DecisionKind.MISS, s, None, w, 0.0)
        self.hits += 1
        entry = self.entries[eid]
        entry.hit_count += 1
        entry.last_hit_time_ms = now_ms
        slot = self._slot[eid]
        self._hits[slot] = entry.hit_count
        if self.mode is CacheMode.EXACT:
            self._exact.move_to_end((entry.model_id, entry.input.tobytes()))
        return CacheDecision(DecisionKind.HIT, s, eid, (1.0 - s) * w, self.c_acc * (1.0 - s) ** 2)

    def admit(self, task: Task, now_ms: float) -> None:
        if self.capacity <= 0:
            return
        if self.mode is CacheMode.EXACT and (task.model_id, task.input.tobytes()) in self._exact:
            return
        if len(self.entries) >= self.capacity:
            self.evict_one(now_ms)
        eid = task.id
        if eid in self.entries:
            raise KeyError(f"entry {eid} already cached")
        entry = CacheEntry(eid, task.input, task.model_id, output_token=eid, feature_token=eid,
                           insert_time_ms=now_ms, last_hit_time_ms=now_ms)
        self.entries[eid] = entry
        if self.mode is CacheMode.EXACT:
            self._exact[(task.model_id, task.input.tobytes())] = eid
        else:
            self._index(task.model_id).insert(eid, task.input)
        slot = self._free.pop()
        self._slot[eid] = slot
        self._ins_s[slot] = now_ms / 1000.0
        self._hits[slot] = 0
        self._ids[slot] = eid
        self._alive[slot] = 1

    def _victim(self, now_ms: float) -> int:
        if self.mode is CacheMode.EXACT:
            return self._exact[next(iter(self._exact))]
        slot = kernels.evict_argmax(self._ins_s, self._hits, self._ids, self._alive,
                                    now_ms / 1000.0, self.w_time, self.w_hits)
        return int(self._ids[slot])

    def evict_one(self, now_ms: float) -> int:
        if not self.entries:
            raise LookupError("cannot evict from an empty cache")
        eid = self._victim(now_ms)
        entry = self.entries.pop(eid)
        if self.mode is CacheMode.EXACT:
            del self._exact[(entry.model_id, entry.input.tobytes())]
        else:
            self.indexes[entry.model_id].remove(eid)
        slot = self._slot.pop(eid)
        self._alive[slot] = 0
        self._free.append(slot)
        self.evictions += 1
        return eid

    def hit_rate(self) -> float | None:
        return None if self.queries == 0 else self.hits / self.queries
