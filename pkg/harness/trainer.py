"""
harness/trainer.py — The mixed on-policy RL loop over synthetic tasks.

Each step:
1. Draw the per-kind batch split from the mixture weights
2. Resample queries per kind, favoring mid-difficulty ones
3. Roll out G responses per query with the current policy
4. Score every response through the reward service (concurrently)
5. Group-normalize advantages and drop zero-variance groups
6. Apply one policy update (on-policy, or the vanilla baseline)

All randomness flows from one SeedSequence, so (seed, config) determines
every sample, reward and parameter vector.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from config.training import TrainConfig
from core.errors import ConfigError
from core.types import QuerySet, RolloutGroup, TaskKind
from grpo.advantages import group_advantages
from grpo.filters import QueryStats, easy_filter, filter_zero_variance, resample_queries
from grpo.optimizer import on_policy_update, vanilla_grpo_update
from harness.evaluate import PolicyEvaluator
from harness.policies import (
    LOG_STD_MAX,
    GaussianBoxPolicy,
    GaussianPointPolicy,
    GaussianSpanPolicy,
    PolicyBundle,
    SoftmaxAnswerPolicy,
    ToyPolicy,
)
from harness.rollout import rollout
from harness.tasks import CANDIDATE_KINDS, SyntheticTaskSpec, build_candidates, gen_tasks
from raas.service import RewardService
from raas.wire import RewardRequest, RewardResponse

logger = logging.getLogger("MORL.harness.trainer")

INITIAL_BOX = (400.0, 400.0, 600.0, 600.0)
INITIAL_POINT = (500.0, 500.0)
INITIAL_SPAN = (180.0, 360.0)


# ── Log ───────────────────────────────────────────────────────────────────────

@dataclass
class StepRecord:
    step: int
    kinds: dict[str, dict[str, float]]
    dropped: int
    skipped: int
    fresh_samples: int
    eval: Optional[dict] = None
    wall_clock_s: float = field(default=0.0, compare=False)

    def to_dict(self, include_timing: bool = False) -> dict:
        out: dict[str, Any] = {
            "step": self.step,
            "kinds": self.kinds,
            "dropped": self.dropped,
            "skipped": self.skipped,
            "fresh_samples": self.fresh_samples,
        }
        if self.eval is not None:
            out["eval"] = self.eval
        if include_timing:
            out["wall_clock_s"] = self.wall_clock_s
        return out


@dataclass
class TrainingLog:
    config: dict
    records: list[StepRecord] = field(default_factory=list)
    initial_eval: Optional[dict] = None
    final_eval: Optional[dict] = None
    curated_out: int = 0
    stopped_early: bool = False
    diagnostic: str = ""

    def append(self, record: StepRecord):
        if self.records and record.step <= self.records[-1].step:
            raise ValueError(f"step {record.step} does not follow step {self.records[-1].step}")
        self.records.append(record)

    @property
    def steps_run(self) -> int:
        return self.records[-1].step if self.records else 0

    @property
    def fresh_samples(self) -> int:
        return self.records[-1].fresh_samples if self.records else 0

    def eval_points(self) -> list[tuple[int, int, dict]]:
        """(step, fresh samples, eval) including the starting policy at step 0."""
        points = []
        if self.initial_eval is not None:
            points.append((0, 0, self.initial_eval))
        points += [(r.step, r.fresh_samples, r.eval) for r in self.records if r.eval is not None]
        return points

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in self.records)

    def summary(self) -> dict:
        return {
            "config": self.config,
            "steps_run": self.steps_run,
            "fresh_samples": self.fresh_samples,
            "curated_out": self.curated_out,
            "stopped_early": self.stopped_early,
            "diagnostic": self.diagnostic,
            "dropped_groups": sum(r.dropped for r in self.records),
            "skipped_groups": sum(r.skipped for r in self.records),
            "initial_eval": self.initial_eval,
            "final_eval": self.final_eval,
        }


# ── Trainer ───────────────────────────────────────────────────────────────────

def build_policy(pools: Mapping[TaskKind, QuerySet], n_candidates: int, rng: np.random.Generator) -> PolicyBundle:
    """One part per policy family the pools need, in a fixed order."""
    queries = [q for kind in TaskKind for q in pools.get(kind, ())]
    parts: list[ToyPolicy] = []

    candidates = {q.id: build_candidates(q, n_candidates, rng)[0] for q in queries if q.kind in CANDIDATE_KINDS}
    if candidates:
        parts.append(SoftmaxAnswerPolicy(candidates))
    boxes = [q.id for q in queries if q.kind in GaussianBoxPolicy.kinds]
    if boxes:
        parts.append(GaussianBoxPolicy(INITIAL_BOX, init_log_std=LOG_STD_MAX, query_ids=boxes))
    points = [q.id for q in queries if q.kind in GaussianPointPolicy.kinds]
    if points:
        parts.append(GaussianPointPolicy(INITIAL_POINT, init_log_std=LOG_STD_MAX, query_ids=points))
    spans = [q.id for q in queries if q.kind in GaussianSpanPolicy.kinds]
    if spans:
        parts.append(GaussianSpanPolicy(INITIAL_SPAN, init_log_std=LOG_STD_MAX, query_ids=spans))
    return PolicyBundle(parts)


class MorlTrainer:
    def __init__(self, config: TrainConfig, service: RewardService, mixture: Optional[Mapping[TaskKind, float]] = None):
        self.config = config
        self.service = service
        weights = dict(mixture if mixture is not None else config.mixture)
        self.kinds = [k for k in TaskKind if weights.get(k, 0.0) > 0]
        if not any(k.is_verifiable for k in self.kinds):
            raise ConfigError("mixture needs at least one verifiable task kind with positive weight")
        self.weights = {k: float(weights[k]) for k in self.kinds}

        seq = np.random.SeedSequence(config.seed)
        candidate_ss, curation_ss, train_ss, eval_ss = seq.spawn(4)
        self.curation_rng = np.random.default_rng(curation_ss)
        self.train_rng = np.random.default_rng(train_ss)

        self.tasks = {
            kind: gen_tasks(SyntheticTaskSpec(kind, config.tasks_per_kind, config.difficulty, config.seed))
            for kind in self.kinds
        }
        self.pools = dict(self.tasks)
        self.policy: ToyPolicy = build_policy(self.tasks, config.n_candidates, np.random.default_rng(candidate_ss))
        self.reference = self.policy
        self.stats: dict[str, QueryStats] = {}
        self.evaluator = PolicyEvaluator(
            [q for kind in self.kinds for q in self.tasks[kind]],
            service.router,
            weights=self.weights,
            samples=config.eval_samples,
            seed=int(eval_ss.generate_state(1)[0]),
        )
        self.log = TrainingLog(config=config.to_dict())

    # ── Scoring ──

    async def score_groups(self, groups: Sequence[RolloutGroup]) -> tuple[list[RolloutGroup], int]:
        """Attach rewards. Groups with any failed slot are skipped and counted."""
        requests = [
            RewardRequest(g.query.id, g.query.kind, r.text, g.query.gold, g.query.prompt)
            for g in groups for r in g.responses
        ]
        results = await self.service.score_batch(requests)
        scored, skipped, at = [], 0, 0
        for g in groups:
            slots = results[at:at + g.size]
            at += g.size
            if all(isinstance(s, RewardResponse) for s in slots):
                scored.append(g.with_rewards([s.reward for s in slots]))
            else:
                failure = next(s for s in slots if not isinstance(s, RewardResponse))
                logger.warning(f"Skipping group for '{g.query.id}': {failure.kind}: {failure.detail}")
                skipped += 1
        return scored, skipped

    def _record_stats(self, groups: Sequence[RolloutGroup]):
        """Replace each query's stats with its newest group. Curation screening fills them first."""
        for g in groups:
            self.stats[g.query.id] = QueryStats(g.query.id, g.size, sum(1 for r in g.rewards if r == 1.0))

    # ── Curation ──

    async def curate(self):
        """Screen out queries the starting policy already solves."""
        n = self.config.curation_rollouts
        if n < 2:
            return
        groups = [rollout(self.policy, q, n, self.curation_rng) for kind in self.kinds for q in self.pools[kind]]
        scored, _ = await self.score_groups(groups)
        self._record_stats(scored)
        easy = easy_filter(self.stats.values(), self.config.easy_filter_threshold)
        if not easy:
            return
        for kind in self.kinds:
            remaining = self.pools[kind].without(easy)
            if len(remaining) == 0:
                logger.warning(f"Curation removed every {kind} query; keeping the full pool")
                continue
            self.log.curated_out += len(self.pools[kind]) - len(remaining)
            self.pools[kind] = remaining
        logger.info(f"Curation filtered {self.log.curated_out} easy queries")

    # ── Steps ──

    def _update(self, kept: list[RolloutGroup]) -> ToyPolicy:
        cfg = self.config
        if not kept:
            return self.policy
        if cfg.optimizer == "vanilla":
            return vanilla_grpo_update(
                self.policy, kept, cfg.learning_rate,
                clip_epsilon=cfg.clip_epsilon,
                reuse_epochs=cfg.reuse_epochs,
                kl_coef=cfg.kl_coef,
                reference=self.reference,
                normalization=cfg.normalization,
            )
        return on_policy_update(self.policy, kept, cfg.learning_rate, cfg.normalization)

    def _kind_metrics(self, groups: Sequence[RolloutGroup]) -> dict[str, dict[str, float]]:
        metrics = {}
        for kind in self.kinds:
            mine = [g for g in groups if g.query.kind == kind]
            if not mine:
                continue
            rewards = np.concatenate([np.asarray(g.rewards) for g in mine])
            tokens = np.concatenate([np.asarray(g.token_counts, dtype=float) for g in mine])
            metrics[str(kind)] = {
                "mean_reward": float(rewards.mean()),
                "pass_rate": float(np.mean(rewards == 1.0)),
                "mean_tokens": float(tokens.mean()),
                "groups": len(mine),
            }
        return metrics

    async def step(self, step: int, fresh_so_far: int) -> StepRecord:
        """One training step: rollouts, scoring, filtering and a single update."""
        cfg = self.config
        started = time.perf_counter()
        probs = np.array([self.weights[k] for k in self.kinds])
        counts = self.train_rng.multinomial(cfg.batch_queries, probs / probs.sum())
        queries = []
        for kind, n in zip(self.kinds, counts):
            if n:
                queries += resample_queries(self.pools[kind], self.stats, self.train_rng, int(n))

        groups = [rollout(self.policy, q, cfg.group_size, self.train_rng) for q in queries]
        scored, skipped = await self.score_groups(groups)
        self._record_stats(scored)

        advantaged = []
        for g in scored:
            adv = group_advantages(g.rewards, cfg.advantage_epsilon)
            advantaged.append(g.with_advantages(list(adv.values), adv.degenerate))
        kept, dropped = filter_zero_variance(advantaged)
        self.policy = self._update(kept)

        record = StepRecord(
            step=step,
            kinds=self._kind_metrics(scored),
            dropped=dropped,
            skipped=skipped,
            fresh_samples=fresh_so_far + len(groups) * cfg.group_size,
        )
        if cfg.eval_every and step % cfg.eval_every == 0:
            record.eval = self.evaluator.evaluate(self.policy).to_dict()
        record.wall_clock_s = time.perf_counter() - started
        return record

    async def run(self, steps: Optional[int] = None) -> TrainingLog:
        cfg = self.config
        total = cfg.steps if steps is None else steps
        logger.info(
            f"Training {cfg.optimizer} for {total} steps on {', '.join(str(k) for k in self.kinds)} "
            f"(seed={cfg.seed}, G={cfg.group_size}, lr={cfg.learning_rate})"
        )
        await self.curate()
        self.log.initial_eval = self.evaluator.evaluate(self.policy).to_dict()

        degenerate_streak = 0
        for step in range(1, total + 1):
            record = await self.step(step, self.log.fresh_samples)
            self.log.append(record)
            scored = sum(m["groups"] for m in record.kinds.values())
            if scored:
                # fully skipped steps leave the streak unchanged
                degenerate_streak = degenerate_streak + 1 if scored == record.dropped else 0
            if record.eval is not None:
                logger.debug(f"step {step}: eval mean reward {record.eval['mean_reward']:.4f}")
            if degenerate_streak >= cfg.max_degenerate_steps:
                self.log.stopped_early = True
                self.log.diagnostic = (
                    f"every rollout group was degenerate (zero reward variance) for "
                    f"{degenerate_streak} consecutive steps; stopped at step {step}"
                )
                logger.warning(self.log.diagnostic)
                break

        last = self.log.records[-1] if self.log.records else None
        if last is not None and last.eval is None:
            last.eval = self.evaluator.evaluate(self.policy).to_dict()
        self.log.final_eval = last.eval if last is not None else self.log.initial_eval
        logger.info(
            f"Finished after {self.log.steps_run} steps: mean reward {self.log.final_eval['mean_reward']:.4f}, "
            f"pass rate {self.log.final_eval['pass_rate']:.4f}"
        )
        return self.log


async def run_morl(
    config: TrainConfig,
    mixture: Optional[Mapping[TaskKind, float]] = None,
    steps: Optional[int] = None,
    service: Optional[RewardService] = None,
) -> TrainingLog:
    """Train a fresh toy policy and return its log. Owns the service if none is passed."""
    config.validate()
    owned = service is None
    service = service or RewardService()
    try:
        trainer = MorlTrainer(config, service, mixture)
        return await trainer.run(steps)
    finally:
        if owned:
            await service.aclose()
