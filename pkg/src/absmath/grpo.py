"""Group-relative policy optimization math, float-valued by contract.

Rewards arrive here as 64-bit floats (exact rationals end at this
boundary). Advantages are the group z-scores with population std; a
zero-variance group gets all-zero advantages rather than a division error.
The KL penalty is the nonnegative estimator exp(d) - d - 1 with
d = logp_ref - logp_policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import GroupTooSmall

DEFAULT_EPSILON = 0.2
DEFAULT_BETA = 0.04
DEFAULT_GROUP_SIZE = 16


@dataclass(frozen=True)
class GrpoConfig:
    epsilon: float = DEFAULT_EPSILON
    beta: float = DEFAULT_BETA
    group_size: int = DEFAULT_GROUP_SIZE

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.group_size < 2:
            raise ValueError("group size must be at least 2")


@dataclass(frozen=True)
class LikelihoodTriple:
    """Per-token-sequence log-likelihoods under the three relevant policies."""

    logp_policy: float
    logp_old: float
    logp_ref: float

    def __post_init__(self):
        for name in ("logp_policy", "logp_old", "logp_ref"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def group_advantages(rewards: Sequence) -> list[float]:
    """Normalize a reward group to mean 0, population std 1.

    All-equal rewards give all-zero advantages. Groups smaller than 2 are
    meaningless to normalize and raise GroupTooSmall.
    """
    if len(rewards) < 2:
        raise GroupTooSmall(f"got {len(rewards)} reward(s), need at least 2")
    xs = [float(r) for r in rewards]
    n = len(xs)
    mean = math.fsum(xs) / n
    variance = math.fsum((x - mean) ** 2 for x in xs) / n
    if variance == 0.0:
        return [0.0] * n
    std = math.sqrt(variance)
    return [(x - mean) / std for x in xs]


def kl_estimate(triple: LikelihoodTriple) -> float:
    """exp(d) - d - 1 with d = logp_ref - logp_policy; always >= 0."""
    d = triple.logp_ref - triple.logp_policy
    return math.expm1(d) - d


def clip(value: float, low: float, high: float) -> float:
    return min(max(value, low), high)


def grpo_objective(
    samples: Sequence[tuple[LikelihoodTriple, float]],
    config: GrpoConfig = GrpoConfig(),
) -> float:
    """Average clipped policy-gradient surrogate minus the KL penalty.

    samples pairs each likelihood triple with its precomputed advantage.
    The average runs over however many samples are given; group_size is the
    default sampling width, not a hard cap here.
    """
    if not samples:
        raise GroupTooSmall("objective needs at least one sample")
    total = 0.0
    for triple, advantage in samples:
        ratio = math.exp(triple.logp_policy - triple.logp_old)
        clipped = clip(ratio, 1.0 - config.epsilon, 1.0 + config.epsilon)
        surrogate = min(ratio * advantage, clipped * advantage)
        total += surrogate - config.beta * kl_estimate(triple)
    return total / len(samples)
