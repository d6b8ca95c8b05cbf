"""
harness/compare.py — On-policy versus vanilla GRPO on the same task stream.

Both arms see the same tasks, candidates and per-step fresh-sample budget
for every seed; vanilla spends each batch reuse_epochs times. Learning
curves are the evaluator's expected reward against fresh samples drawn.
"""

import logging
import math
from typing import Optional, Sequence

import numpy as np

from config.training import TrainConfig
from core.errors import ConfigError
from harness.trainer import TrainingLog, run_morl
from raas.service import RewardService

logger = logging.getLogger("MORL.harness.compare")

MIN_SEEDS = 5
ARMS = ("on_policy", "vanilla")
LATE_WINDOW = 0.25


def eval_steps(steps: int, eval_every: int) -> list[int]:
    grid = [0]
    if eval_every:
        grid += list(range(eval_every, steps + 1, eval_every))
    if grid[-1] != steps:
        grid.append(steps)
    return grid


def learning_curve(log: TrainingLog, grid: Sequence[int]) -> np.ndarray:
    """Mean eval reward at each grid step. A run that stopped early holds its final value."""
    by_step = {step: ev["mean_reward"] for step, _, ev in log.eval_points()}
    final = log.final_eval["mean_reward"]
    return np.array([by_step.get(step, final) if step <= log.steps_run else final for step in grid])


def late_slope(x: np.ndarray, y: np.ndarray, window: float = LATE_WINDOW) -> float:
    """Least-squares slope over the last `window` share of the curve (at least two points)."""
    k = max(2, math.ceil(len(x) * window))
    slope, _ = np.polyfit(x[-k:], y[-k:], 1)
    return float(slope)


async def compare_onpolicy_vs_vanilla(
    config: TrainConfig,
    steps: Optional[int] = None,
    seeds: int | Sequence[int] = MIN_SEEDS,
    service: Optional[RewardService] = None,
) -> dict:
    seed_list = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    if len(seed_list) < MIN_SEEDS:
        raise ConfigError(f"a comparison needs at least {MIN_SEEDS} seeds, got {len(seed_list)}")
    total = config.steps if steps is None else steps
    grid = eval_steps(total, config.eval_every)
    x = np.array(grid, dtype=float) * config.batch_queries * config.group_size

    owned = service is None
    service = service or RewardService()
    curves: dict[str, list[np.ndarray]] = {arm: [] for arm in ARMS}
    try:
        for seed in seed_list:
            for arm in ARMS:
                log = await run_morl(config.with_overrides(seed=seed, optimizer=arm), steps=total, service=service)
                curves[arm].append(learning_curve(log, grid))
            logger.info(
                f"seed {seed}: on-policy {curves['on_policy'][-1][-1]:.4f}, vanilla {curves['vanilla'][-1][-1]:.4f}"
            )
    finally:
        if owned:
            await service.aclose()

    arms = {}
    for arm in ARMS:
        ys = np.vstack(curves[arm])
        slopes = [late_slope(x, y) for y in ys]
        arms[arm] = {
            "mean": ys.mean(axis=0).tolist(),
            "std": ys.std(axis=0).tolist(),
            "final": ys[:, -1].tolist(),
            "final_mean": float(ys[:, -1].mean()),
            "final_std": float(ys[:, -1].std()),
            "late_slopes": slopes,
            "late_slope_mean": float(np.mean(slopes)),
        }

    plateau_seeds = sum(
        1 for on, van in zip(arms["on_policy"]["late_slopes"], arms["vanilla"]["late_slopes"]) if van <= 0.5 * on
    )
    on_ahead = arms["on_policy"]["final_mean"] >= arms["vanilla"]["final_mean"]
    return {
        "seeds": seed_list,
        "steps": total,
        "eval_steps": grid,
        "fresh_samples": x.tolist(),
        "arms": arms,
        "criteria": {
            "on_policy_final_ge_vanilla": on_ahead,
            "vanilla_plateau_seeds": plateau_seeds,
            "reproduced": on_ahead and plateau_seeds >= math.ceil(0.8 * len(seed_list)),
        },
    }
