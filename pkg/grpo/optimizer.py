"""
grpo/optimizer.py — Policy-gradient updates over rollout groups.

on_policy_update takes exactly one ascent step per freshly sampled batch:
no importance ratio, no clipping, no KL term. Every rollout group carries
a single-use ticket stamped with the policy version that sampled it, so
reusing a batch or feeding it to a different policy raises
StaleRolloutError.

vanilla_grpo_update is the baseline: several passes over one batch with
the per-response clipped surrogate and an optional k3 KL penalty toward a
frozen reference policy.
"""

import logging
import math
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from core.errors import ConfigError, StaleRolloutError
from core.types import Query, Response, RolloutGroup
from grpo.advantages import response_weights

logger = logging.getLogger("MORL.grpo")


class DifferentiablePolicy(Protocol):
    version: int

    @property
    def params(self) -> np.ndarray: ...

    def log_prob(self, query: Query, response: Response) -> float: ...

    def grad_log_prob(self, query: Query, response: Response) -> np.ndarray: ...

    def project(self, params: np.ndarray) -> np.ndarray: ...

    def with_params(self, params: np.ndarray) -> "DifferentiablePolicy": ...


# (group, response index, weight, policy) -> scalar multiplier of grad log pi
Coefficient = Callable[[RolloutGroup, int, float, DifferentiablePolicy], float]


def _check_tickets(policy: DifferentiablePolicy, batch: Sequence[RolloutGroup]) -> None:
    seen: set[int] = set()
    for group in batch:
        ticket = group.ticket
        if ticket is None:
            raise StaleRolloutError(f"group for '{group.query.id}' was not sampled by a rollout this step")
        if ticket.consumed or id(ticket) in seen:
            raise StaleRolloutError(f"group for '{group.query.id}' was already used for an update")
        if ticket.policy_version != policy.version:
            raise StaleRolloutError(
                f"group for '{group.query.id}' was sampled by policy v{ticket.policy_version}, "
                f"current policy is v{policy.version}"
            )
        if len(group.advantages) != group.size:
            raise ValueError(f"group for '{group.query.id}' has no advantages")
        seen.add(id(ticket))


def _consume(batch: Sequence[RolloutGroup]) -> None:
    for group in batch:
        group.ticket.consumed = True


def _accumulate(
    policy: DifferentiablePolicy,
    batch: Sequence[RolloutGroup],
    normalization: str,
    coefficient: Coefficient,
) -> np.ndarray:
    grad = np.zeros_like(policy.params, dtype=float)
    for group, weights in zip(batch, response_weights(batch, normalization)):
        for i, resp in enumerate(group.responses):
            c = coefficient(group, i, float(weights[i]), policy)
            if c != 0.0:
                grad += c * policy.grad_log_prob(group.query, resp)
    return grad


def _plain(group: RolloutGroup, i: int, w: float, policy: DifferentiablePolicy) -> float:
    return w * group.advantages[i]


def policy_gradient(policy: DifferentiablePolicy, group: RolloutGroup) -> np.ndarray:
    """Sum_i (|o_i| A_i / sum_k |o_k|) grad log pi(o_i | q) for one group."""
    _check_tickets(policy, [group])
    return _accumulate(policy, [group], "group", _plain)


def batch_gradient(policy: DifferentiablePolicy, batch: Sequence[RolloutGroup], normalization: str = "group") -> np.ndarray:
    _check_tickets(policy, batch)
    return _accumulate(policy, batch, normalization, _plain)


def on_policy_update(
    policy: DifferentiablePolicy,
    batch: Sequence[RolloutGroup],
    lr: float,
    normalization: str = "group",
) -> DifferentiablePolicy:
    """One ascent step on a batch sampled by `policy`; the batch is consumed."""
    if not batch:
        return policy
    grad = batch_gradient(policy, batch, normalization)
    _consume(batch)
    updated = policy.with_params(policy.project(policy.params + lr * grad))
    logger.debug(f"on-policy step v{policy.version}->v{updated.version}, |grad|={np.linalg.norm(grad):.4g}")
    return updated


def surrogate_coefficient(advantage: float, ratio: float, clip_epsilon: float) -> float:
    """d/dlogpi of min(rho*A, clip(rho, 1-eps, 1+eps)*A). Zero where the clip saturates."""
    if advantage > 0 and ratio > 1.0 + clip_epsilon:
        return 0.0
    if advantage < 0 and ratio < 1.0 - clip_epsilon:
        return 0.0
    return advantage * ratio


def vanilla_grpo_update(
    policy: DifferentiablePolicy,
    batch: Sequence[RolloutGroup],
    lr: float,
    clip_epsilon: float = 0.2,
    reuse_epochs: int = 4,
    kl_coef: float = 0.0,
    reference: Optional[DifferentiablePolicy] = None,
    normalization: str = "group",
) -> DifferentiablePolicy:
    """reuse_epochs ascent steps on the same batch with the clipped surrogate.

    With kl_coef > 0 the per-response k3 estimate exp(u) - u - 1,
    u = log pi_ref - log pi, is subtracted (token-weighted) from the surrogate.
    """
    if clip_epsilon <= 0:
        raise ConfigError(f"clip_epsilon must be > 0, got {clip_epsilon}")
    if reuse_epochs < 1:
        raise ConfigError(f"reuse_epochs must be >= 1, got {reuse_epochs}")
    if kl_coef > 0 and reference is None:
        raise ConfigError("kl_coef > 0 needs a reference policy")
    if not batch:
        return policy
    _check_tickets(policy, batch)

    def clipped(group: RolloutGroup, i: int, w: float, current: DifferentiablePolicy) -> float:
        resp = group.responses[i]
        ratio = math.exp(current.log_prob(group.query, resp) - resp.logprob)
        c = w * surrogate_coefficient(group.advantages[i], ratio, clip_epsilon)
        if kl_coef > 0:
            u = reference.log_prob(group.query, resp) - current.log_prob(group.query, resp)
            c -= kl_coef * w * (1.0 - math.exp(u))
        return c

    current = policy
    for _ in range(reuse_epochs):
        grad = _accumulate(current, batch, normalization, clipped)
        current = current.with_params(current.project(current.params + lr * grad))
    _consume(batch)
    logger.debug(f"vanilla step v{policy.version}->v{current.version} over {reuse_epochs} epochs")
    return current
