"""
grpo/filters.py — Dynamic sampling, easy-data filter and difficulty-aware resampling.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from core.types import Query, QuerySet, RolloutGroup

logger = logging.getLogger("MORL.grpo.filters")


@dataclass(frozen=True)
class QueryStats:
    query_id: str
    attempts: int
    passes: int

    def __post_init__(self):
        if not (0 <= self.passes <= self.attempts):
            raise ValueError(f"QueryStats({self.query_id}): need 0 <= passes <= attempts, got {self.passes}/{self.attempts}")

    @property
    def pass_rate(self) -> float:
        return self.passes / self.attempts if self.attempts else 0.0

    @property
    def smoothed_pass_rate(self) -> float:
        return (self.passes + 1) / (self.attempts + 2)


def filter_zero_variance(groups: Sequence[RolloutGroup]) -> tuple[list[RolloutGroup], int]:
    """Keep groups whose rewards differ; all-right and all-wrong groups have no gradient."""
    kept = [g for g in groups if g.rewards and max(g.rewards) != min(g.rewards)]
    return kept, len(groups) - len(kept)


def easy_filter(stats: Iterable[QueryStats], threshold: float = 0.9) -> set[str]:
    """Ids whose pass rate strictly exceeds the threshold."""
    return {s.query_id for s in stats if s.attempts >= 1 and s.pass_rate > threshold}


def _stats_by_id(stats: Mapping[str, QueryStats] | Iterable[QueryStats]) -> dict[str, QueryStats]:
    if isinstance(stats, Mapping):
        return dict(stats)
    return {s.query_id: s for s in stats}


def resample_weights(queryset: QuerySet, stats: Mapping[str, QueryStats] | Iterable[QueryStats]) -> np.ndarray:
    """Sampling probabilities proportional to p(1-p) with Laplace-smoothed p."""
    by_id = _stats_by_id(stats)
    p = np.array([
        by_id[q.id].smoothed_pass_rate if q.id in by_id else 0.5
        for q in queryset
    ])
    w = p * (1.0 - p)
    return w / w.sum()


def resample_queries(
    queryset: QuerySet,
    stats: Mapping[str, QueryStats] | Iterable[QueryStats],
    rng: np.random.Generator,
    batch_size: int,
) -> list[Query]:
    """Draw a batch favoring mid-difficulty queries. Without replacement when the pool allows."""
    if len(queryset) == 0:
        raise ValueError("cannot resample from an empty query pool")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    probs = resample_weights(queryset, stats)
    idx = rng.choice(len(queryset), size=batch_size, replace=batch_size > len(queryset), p=probs)
    return [queryset[int(i)] for i in idx]
