"""
harness/evaluate.py — Expected reward and pass rate of a toy policy.

Softmax parts are evaluated exactly: every candidate is scored once and
weighted by its probability. Gaussian parts use a fixed-seed Monte-Carlo
estimate, so two evaluations of the same parameters agree bit for bit and
the noise is common across policies.
"""

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from core.types import Query, TaskKind
from harness.policies import PolicyBundle, SoftmaxAnswerPolicy, ToyPolicy
from raas.router import RewardRouter
from raas.wire import RewardRequest

logger = logging.getLogger("MORL.harness.eval")


@dataclass(frozen=True)
class EvalResult:
    per_kind: dict[str, dict[str, float]]
    mean_reward: float
    pass_rate: float

    def to_dict(self) -> dict:
        return {"mean_reward": self.mean_reward, "pass_rate": self.pass_rate, "per_kind": self.per_kind}


class PolicyEvaluator:
    def __init__(
        self,
        queries: Sequence[Query],
        router: RewardRouter,
        weights: Optional[Mapping[TaskKind, float]] = None,
        samples: int = 64,
        seed: int = 0,
    ):
        if not queries:
            raise ValueError("nothing to evaluate")
        self.queries = tuple(queries)
        self.router = router
        self.samples = samples
        self.seed = seed
        kinds = [k for k in TaskKind if any(q.kind == k for q in self.queries)]
        raw = {k: float((weights or {}).get(k, 1.0)) for k in kinds}
        total = sum(raw.values())
        self.weights = {k: w / total for k, w in raw.items()}
        self._candidate_rewards: dict[str, np.ndarray] = {}

    def _reward(self, q: Query, text: str) -> float:
        return self.router.score_local(RewardRequest(q.id, q.kind, text, q.gold, q.prompt))

    def candidate_rewards(self, policy: SoftmaxAnswerPolicy, q: Query) -> np.ndarray:
        cached = self._candidate_rewards.get(q.id)
        if cached is None:
            cached = np.array([self._reward(q, text) for text in policy.candidates[q.id]])
            self._candidate_rewards[q.id] = cached
        return cached

    def query_value(self, policy: ToyPolicy, q: Query, index: int) -> tuple[float, float]:
        """(expected reward, pass probability) of `policy` on one query."""
        part = policy.part_for(q) if isinstance(policy, PolicyBundle) else policy
        if isinstance(part, SoftmaxAnswerPolicy):
            probs = part.probabilities(q)
            rewards = self.candidate_rewards(part, q)
            return float(probs @ rewards), float(probs @ (rewards == 1.0))
        rng = np.random.default_rng((self.seed, index))
        rewards = np.array([self._reward(q, part.sample(q, rng).text) for _ in range(self.samples)])
        return float(rewards.mean()), float(np.mean(rewards == 1.0))

    def evaluate(self, policy: ToyPolicy) -> EvalResult:
        by_kind: dict[TaskKind, list[tuple[float, float]]] = {k: [] for k in self.weights}
        for i, q in enumerate(self.queries):
            by_kind[q.kind].append(self.query_value(policy, q, i))

        per_kind = {}
        mean_reward = pass_rate = 0.0
        for kind, values in by_kind.items():
            arr = np.array(values)
            kind_reward, kind_pass = float(arr[:, 0].mean()), float(arr[:, 1].mean())
            per_kind[str(kind)] = {"mean_reward": kind_reward, "pass_rate": kind_pass}
            mean_reward += self.weights[kind] * kind_reward
            pass_rate += self.weights[kind] * kind_pass
        return EvalResult(per_kind, mean_reward, pass_rate)
