"""SimHash signatures and a banded multi-table LSH index over unit vectors."""

from __future__ import annotations

import numpy as np

from . import kernels

N_BITS = 64
N_TABLES = 4
BAND_BITS = N_BITS // N_TABLES
_BAND_MASK = (1 << BAND_BITS) - 1


def make_projections(dim: int, rng: np.random.Generator) -> np.ndarray:
    """64 x dim standard-normal hyperplanes."""
    return np.ascontiguousarray(rng.standard_normal((N_BITS, dim)))


def simhash(x: np.ndarray, projections: np.ndarray) -> int:
    """Bit ``k`` is 1 iff ``projections[k] @ x >= 0`` (zero maps to 1)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != projections.shape[1]:
        raise ValueError(f"input has shape {x.shape}, projections expect dim {projections.shape[1]}")
    return kernels.simhash64(projections, x)


def bands(sig: int) -> tuple[int, ...]:
    return tuple((sig >> (BAND_BITS * b)) & _BAND_MASK for b in range(N_TABLES))


class LshIndex:
    """Four hash tables keyed by 16-bit bands of a 64-bit SimHash.

    Candidate generation is approximate; the returned similarity is always an
    exact dot product over the candidate union.
    """

    def __init__(self, dim: int, projections: np.ndarray, initial_capacity: int = 256):
        if projections.shape != (N_BITS, dim):
            raise ValueError(f"projections must be {N_BITS}x{dim}")
        self.dim = dim
        self.projections = np.ascontiguousarray(projections, dtype=np.float64)
        self.tables: list[dict[int, list[int]]] = [{} for _ in range(N_TABLES)]
        self._vectors = np.zeros((max(initial_capacity, 1), dim))
        self._slot: dict[int, int] = {}
        self._sig: dict[int, int] = {}
        self._free: list[int] = []
        self._next_slot = 0
        self.last_candidates = 0

    def __len__(self) -> int:
        return len(self._slot)

    def __contains__(self, id_: int) -> bool:
        return id_ in self._slot

    def ids(self) -> list[int]:
        return sorted(self._slot)

    def vector(self, id_: int) -> np.ndarray:
        return self._vectors[self._slot[id_]]

    def insert(self, id_: int, x: np.ndarray) -> int:
        if id_ in self._slot:
            raise KeyError(f"id {id_} already indexed")
        sig = simhash(x, self.projections)
        if self._free:
            slot = self._free.pop()
        else:
            if self._next_slot == self._vectors.shape[0]:
                grown = np.zeros((2 * self._vectors.shape[0], self.dim))
                grown[: self._next_slot] = self._vectors
                self._vectors = grown
            slot = self._next_slot
            self._next_slot += 1
        self._vectors[slot] = x
        self._slot[id_] = slot
        self._sig[id_] = sig
        for table, key in zip(self.tables, bands(sig)):
            table.setdefault(key, []).append(id_)
        return sig

    def remove(self, id_: int) -> None:
        if id_ not in self._slot:
            raise KeyError(f"id {id_} not indexed")
        sig = self._sig.pop(id_)
        for table, key in zip(self.tables, bands(sig)):
            bucket = table[key]
            bucket.remove(id_)
            if not bucket:
                del table[key]
        self._free.append(self._slot.pop(id_))

    def candidates(self, x: np.ndarray) -> list[int]:
        sig = simhash(x, self.projections)
        found: set[int] = set()
        for table, key in zip(self.tables, bands(sig)):
            bucket = table.get(key)
            if bucket:
                found.update(bucket)
        return sorted(found)

    def lookup(self, x: np.ndarray) -> tuple[int, float] | None:
        """Best exact-cosine match among band-colliding entries, ties to the smaller id."""
        if not self._slot:
            self.last_candidates = 0
            return None
        cand = self.candidates(x)
        self.last_candidates = len(cand)
        if not cand:
            return None
        rows = np.fromiter((self._slot[i] for i in cand), dtype=np.intp, count=len(cand))
        pos, sim = kernels.best_match(self._vectors, rows, np.asarray(x, dtype=np.float64))
        return cand[pos], sim

    def exhaustive_lookup(self, x: np.ndarray) -> tuple[int, float] | None:
        """Brute-force oracle over every entry."""
        if not self._slot:
            return None
        cand = self.ids()
        rows = np.array([self._slot[i] for i in cand], dtype=np.intp)
        pos, sim = kernels.best_match(self._vectors, rows, np.asarray(x, dtype=np.float64))
        return cand[pos], sim
