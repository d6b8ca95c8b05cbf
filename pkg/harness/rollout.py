"""
harness/rollout.py — Sample a group of G responses for one query.
"""

import numpy as np

from core.errors import PolicyMismatchError
from core.types import Query, RolloutGroup, RolloutTicket
from harness.policies import ToyPolicy


def rollout(policy: ToyPolicy, q: Query, G: int, rng: np.random.Generator) -> RolloutGroup:
    """G independent samples from `policy`, stamped with its current version.

    Rewards are left empty; scoring is the reward service's job.
    """
    if not policy.supports(q):
        raise PolicyMismatchError(f"{type(policy).__name__} cannot answer {q.kind} query '{q.id}'")
    if G < 2:
        raise ValueError(f"G must be >= 2, got {G}")
    responses = tuple(policy.sample(q, rng) for _ in range(G))
    return RolloutGroup(q, responses, ticket=RolloutTicket(policy.version))
