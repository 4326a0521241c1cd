"""Placement policies over filtered candidates, the reward function, and a linear TD(0) learner."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import PolicyKind, RewardWeights

N_FEATURES = 6  # alpha, normalized link, load, queue depth, hosted, bias
QUEUE_DEPTH_CAP = 20.0


@dataclass(frozen=True)
class RewardRecord:
    latency_term: float
    cost_term: float
    cache_term: float
    deadline_term: float
    total: float


def reward(latency_ms, deadline_ms, cost, hit, weights: RewardWeights,
           mean_cost: float | None = None) -> RewardRecord:
    """Weighted reward over a batch of completed tasks.

    Latency is normalized by each task's deadline and cost by ``mean_cost``
    (defaults to the batch mean).
    """
    L = np.atleast_1d(np.asarray(latency_ms, float))
    d = np.atleast_1d(np.asarray(deadline_ms, float))
    C = np.atleast_1d(np.asarray(cost, float))
    R = np.atleast_1d(np.asarray(hit, float))
    if mean_cost is None:
        mean_cost = float(C.mean()) if C.size else 0.0
    lat = float(np.sum(L / d))
    cst = float(np.sum(C) / mean_cost) if mean_cost > 0 else 0.0
    cache = float(np.sum(R))
    dl = float(np.sum(L <= d))
    total = (-weights.latency * lat - weights.cost * cst + weights.cache * cache
             + weights.deadline * dl)
    return RewardRecord(lat, cst, cache, dl, total)


@dataclass
class CandidateView:
    """Per-candidate state snapshot aligned with ``ids`` (sorted ascending)."""

    ids: np.ndarray
    alpha: np.ndarray
    link_hat: np.ndarray
    load: np.ndarray
    queue_depth: np.ndarray
    hosted: np.ndarray

    def features(self) -> np.ndarray:
        n = len(self.ids)
        phi = np.empty((n, N_FEATURES))
        phi[:, 0] = self.alpha
        phi[:, 1] = self.link_hat
        phi[:, 2] = self.load
        phi[:, 3] = np.minimum(self.queue_depth, QUEUE_DEPTH_CAP) / QUEUE_DEPTH_CAP
        phi[:, 4] = self.hosted
        phi[:, 5] = 1.0
        return phi


@dataclass
class TdLearner:
    """Linear action-value estimate ``Q(a) = phi(a) @ w`` trained by TD(0).

    Exploration rate and step size both decay as ``x0 / t**0.6``.
    """

    eta0: float = 0.1
    eps0: float = 0.2
    gamma: float = 0.95
    centered: bool = True
    w: np.ndarray = field(default_factory=lambda: np.zeros(N_FEATURES))
    t: int = 0  # completed updates
    decisions: int = 0

    def featurize(self, phi: np.ndarray) -> np.ndarray:
        """Express candidate features relative to the candidate-set mean.

        The bias column then carries the state value and the other weights
        carry only action preferences, which keeps uniformly negative rewards
        from pushing the learner away from whatever it tried first.
        """
        phi = np.array(phi, dtype=float)
        if self.centered and phi.ndim == 2 and len(phi) > 1:
            phi[:, :-1] -= phi[:, :-1].mean(axis=0)
        return phi

    def epsilon(self) -> float:
        return self.eps0 / max(1, self.decisions) ** 0.6

    def eta(self) -> float:
        return self.eta0 / max(1, self.t) ** 0.6

    def values(self, phi: np.ndarray) -> np.ndarray:
        return phi @ self.w


def td_update(learner: TdLearner, phi: np.ndarray, r: float, next_phi: np.ndarray | None) -> TdLearner:
    """One TD(0) step toward ``r + gamma * max_a' Q(next_phi)``; ``next_phi=None`` is terminal."""
    phi = np.asarray(phi, float)
    if not np.isfinite(phi).all() or not np.isfinite(r):
        raise ValueError("non-finite feature or reward")
    bootstrap = 0.0
    if next_phi is not None:
        next_phi = np.atleast_2d(np.asarray(next_phi, float))
        if not np.isfinite(next_phi).all():
            raise ValueError("non-finite next-state feature")
        if next_phi.size:
            bootstrap = learner.gamma * float(np.max(next_phi @ learner.w))
    learner.t += 1
    delta = r + bootstrap - float(phi @ learner.w)
    learner.w = learner.w + learner.eta() * delta * phi
    return learner


@dataclass
class GreedyState:
    rotation: int = 0


def _argmin_stable(score: np.ndarray) -> int:
    return int(np.argmin(score))  # first minimum, i.e. smallest id since ids are sorted


def select(policy: PolicyKind | str, view: CandidateView, rng: np.random.Generator,
           learner: TdLearner | None = None, greedy: GreedyState | None = None) -> int:
    """Choose one node id from ``view.ids``."""
    n = len(view.ids)
    if n == 0:
        raise ValueError("empty candidate set")
    kind = PolicyKind(policy)
    if kind is PolicyKind.RANDOM:
        return int(view.ids[rng.integers(n)])
    if kind is PolicyKind.GREEDY_RR:
        tied = np.flatnonzero(view.load == view.load.min())
        g = greedy if greedy is not None else GreedyState()
        pick = tied[g.rotation % len(tied)]
        g.rotation += 1
        return int(view.ids[pick])
    if kind is PolicyKind.DAOEF_PROXIMITY:
        return int(view.ids[_argmin_stable(view.link_hat + view.load)])
    if learner is None:
        raise ValueError("TD policy needs a learner")
    learner.decisions += 1
    if rng.random() < learner.epsilon():
        return int(view.ids[rng.integers(n)])
    return int(view.ids[int(np.argmax(learner.values(learner.featurize(view.features()))))])


# ---------------------------------------------------------------------------
# Two-node toy world used to probe learner convergence
# ---------------------------------------------------------------------------


class ToyWorld:
    """Two actions over ``n_states`` contexts; action 0 dominates in every feature.

    Rewards are linear in the features and transitions are uniform and
    independent of the action, so the optimal policy is computable exactly.
    """

    W_TRUE = np.array([1.0, -1.0, -1.0, -0.5, 0.0, 0.0])

    def __init__(self, n_states: int = 40, seed: int = 0, gamma: float = 0.95):
        rng = np.random.default_rng(seed)
        self.n_states = n_states
        self.gamma = gamma
        b_alpha = rng.uniform(0.1, 0.7, n_states)
        b_link = rng.uniform(0.3, 1.0, n_states)
        b_load = rng.uniform(0.3, 1.0, n_states)
        b_q = rng.uniform(0.3, 1.0, n_states)
        margin = rng.uniform(0.05, 0.3, (4, n_states))
        self.phi = np.zeros((n_states, 2, N_FEATURES))
        self.phi[:, 0] = np.column_stack([b_alpha + margin[0], b_link - margin[1], b_load - margin[2],
                                          b_q - margin[3], np.ones(n_states), np.ones(n_states)])
        self.phi[:, 1] = np.column_stack([b_alpha, b_link, b_load, b_q, np.ones(n_states),
                                          np.ones(n_states)])
        self.rewards = self.phi @ self.W_TRUE  # (n_states, 2)

    def step(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.n_states))

    def brute_force_optimal(self, tol: float = 1e-12) -> np.ndarray:
        """Optimal action per state by value iteration on the exact tabular model."""
        q = np.zeros((self.n_states, 2))
        while True:
            v_next = q.max(axis=1).mean()  # uniform next-state distribution
            q_new = self.rewards + self.gamma * v_next
            if np.max(np.abs(q_new - q)) < tol:
                return np.argmax(q_new, axis=1)
            q = q_new

    def greedy_policy(self, learner: TdLearner) -> np.ndarray:
        return np.array([int(np.argmax(learner.featurize(p) @ learner.w)) for p in self.phi])


def train_toy(world: ToyWorld, steps: int, seed: int, eta0: float = 1.0, eps0: float = 0.5) -> TdLearner:
    rng = np.random.default_rng(seed)
    learner = TdLearner(eta0=eta0, eps0=eps0, gamma=world.gamma)
    s = world.step(rng)
    for _ in range(steps):
        view_phi = learner.featurize(world.phi[s])
        learner.decisions += 1
        if rng.random() < learner.epsilon():
            a = int(rng.integers(2))
        else:
            a = int(np.argmax(view_phi @ learner.w))
        s_next = world.step(rng)
        td_update(learner, view_phi[a], float(world.rewards[s, a]), learner.featurize(world.phi[s_next]))
        s = s_next
    return learner
