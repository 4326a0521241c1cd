"""Closed-form bounds and models: approximation ratio, cache benefit, delta error, layer choice, synergy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

# Published constants for the same inputs; reported next to the formula values.
CLAIMED = {
    "approx_ratio_eps": 0.06,
    "cache_benefit_bound": 0.32,
    "synergy": 0.72,
}


def approx_ratio_eps(K: int, p: int, sigma_alpha: float) -> float:
    """Leading term ``sigma * sqrt(2 ln(K/p) / p)`` of the top-p approximation gap.

    The additional ``O(|S|^-1/2)`` sampling term has no published constant and
    is omitted, so this is a lower estimate of the gap.
    """
    if not K > p >= 1:
        raise ValueError("need K > p ≥ 1")
    if sigma_alpha < 0:
        raise ValueError("sigma_alpha must be ≥ 0")
    return sigma_alpha * math.sqrt(2.0 * math.log(K / p) / p)


def cache_benefit_bound(s_bar: float, theta: float) -> float:
    """Lower bound ``(s-θ)(s+1) / (2(1-θ))`` on the fraction of compute saved."""
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0,1)")
    if not theta < s_bar <= 1.0:
        raise ValueError("bound is vacuous unless theta < s_bar ≤ 1")
    return (s_bar - theta) * (s_bar + 1.0) / (2.0 * (1.0 - theta))


def delta_error_bound(s: float, C: float) -> float:
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0,1]")
    if C < 0:
        raise ValueError("C must be ≥ 0")
    return C * (1.0 - s) ** 2


@dataclass(frozen=True)
class LayerCostProfile:
    """Per-layer decode cost and remaining-encode cost, layers numbered from 1."""

    decode: Sequence[float]
    encode: Sequence[float]
    s_bar: float

    def __post_init__(self):
        if len(self.decode) != len(self.encode) or not self.decode:
            raise ValueError("decode and encode must be equal-length and nonempty")
        if any(c <= 0 for c in (*self.decode, *self.encode)):
            raise ValueError("layer costs must be positive")

    def objective(self, layer: int) -> float:
        return self.decode[layer - 1] + (1.0 - self.s_bar) * self.encode[layer - 1]


def optimal_layer(profile: LayerCostProfile) -> int:
    """Layer minimizing decode plus similarity-discounted encode cost; ties to the earlier layer."""
    return min(range(1, len(profile.decode) + 1), key=lambda l: (profile.objective(l), l))


def synergy_predict(S_p: float, S_c: float, S_h: float, beta: float) -> float:
    if beta < 0:
        raise ValueError("beta must be ≥ 0")
    for v in (S_p, S_c, S_h):
        if not 0.0 <= v <= 1.0:
            raise ValueError("reduction terms must lie in [0,1]")
    return S_p * (1.0 + beta * S_c * S_h)


@dataclass(frozen=True)
class BoundCheck:
    holds: bool
    margin: float
    measured: float
    bound: float


def check_bound_against_run(metrics, kind: str, *, s_bar: float | None = None,
                            theta: float | None = None, c_acc: float | None = None) -> BoundCheck:
    """Compare a finished run against a closed-form bound.

    ``kind="cache_benefit"`` checks the measured savings fraction against
    :func:`cache_benefit_bound`; ``kind="delta_error"`` checks the worst per-hit
    accuracy penalty against ``C_acc (1-θ)^2``.
    """
    if kind == "cache_benefit":
        if s_bar is None or theta is None:
            raise ValueError("cache_benefit needs s_bar and theta")
        bound = cache_benefit_bound(s_bar, theta)
        measured = metrics.savings_fraction
        return BoundCheck(measured >= bound, measured - bound, measured, bound)
    if kind == "delta_error":
        if theta is None or c_acc is None:
            raise ValueError("delta_error needs theta and c_acc")
        bound = delta_error_bound(theta, c_acc)
        pen = metrics.columns["accuracy_penalty"]
        measured = float(pen.max()) if len(pen) else 0.0
        return BoundCheck(measured <= bound, bound - measured, measured, bound)
    raise ValueError(f"unknown bound kind {kind!r}")
