"""
grpo/advantages.py — Group-normalized advantages and the token-weighted objective.

Each response's advantage is its reward standardized within its group
(population std, no Bessel correction) and broadcast over all of its
tokens. Because the advantage is constant across a response's tokens, the
per-token double sum of the objective reduces to weighting each response
by its token count.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from core.types import RolloutGroup

NORMALIZATIONS = ("group", "batch")


@dataclass(frozen=True)
class AdvantageVector:
    values: tuple[float, ...]
    degenerate: bool = False

    def __len__(self) -> int:
        return len(self.values)


def group_advantages(rewards: Sequence[float], epsilon: float = 1e-8) -> AdvantageVector:
    """(r_i - mean) / std within one group.

    Zero-spread groups carry no signal: they come back as zeros with the
    degenerate flag set. The epsilon only enters the denominator when the
    spread is below it.
    """
    r = np.asarray(rewards, dtype=float)
    if r.size < 2:
        raise ValueError(f"group advantages need G >= 2 rewards, got {r.size}")
    if np.ptp(r) == 0.0:
        return AdvantageVector(tuple(0.0 for _ in range(r.size)), degenerate=True)

    std = float(r.std())
    denom = std if std > epsilon else std + epsilon
    return AdvantageVector(tuple(float(a) for a in (r - r.mean()) / denom))


def response_weights(groups: Sequence[RolloutGroup], normalization: str = "group") -> list[np.ndarray]:
    """Per-response weights |o_i| / (token normalizer), one array per group.

    "group": each group normalized by its own token total, then groups averaged.
    "batch": every response normalized by the token total of the whole batch.
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}, got '{normalization}'")
    counts = [np.asarray(g.token_counts, dtype=float) for g in groups]
    if normalization == "group":
        n = len(groups)
        return [c / c.sum() / n for c in counts]
    total = sum(float(c.sum()) for c in counts)
    return [c / total for c in counts]


def token_weighted_objective(
    groups: Sequence[RolloutGroup],
    normalization: str = "group",
    policy: Optional[object] = None,
) -> float:
    """Token-weighted mean advantage over a batch.

    With `policy` given, each advantage is scaled by the likelihood ratio
    pi_policy(o) / pi_sampler(o), which makes this a differentiable
    surrogate whose gradient at the sampling parameters is the policy
    gradient.
    """
    if not groups:
        raise ValueError("token_weighted_objective needs at least one group")
    total = 0.0
    for group, weights in zip(groups, response_weights(groups, normalization)):
        if len(group.advantages) != group.size:
            raise ValueError(f"group for query '{group.query.id}' has no advantages")
        for w, a, resp in zip(weights, group.advantages, group.responses):
            ratio = 1.0 if policy is None else math.exp(policy.log_prob(group.query, resp) - resp.logprob)
            total += float(w) * a * ratio
    return total


def explicit_token_objective(groups: Sequence[RolloutGroup]) -> float:
    """Literal per-token double sum, per group, averaged over groups."""
    values = []
    for group in groups:
        numerator = 0.0
        for a, n_tokens in zip(group.advantages, group.token_counts):
            for _ in range(n_tokens):
                numerator += a
        values.append(numerator / sum(group.token_counts))
    return sum(values) / len(values)
