"""
rewards/base.py — @reward_kernel decorator and kernel discovery.

A reward kernel is a plain function `(response_text, gold) -> float`.
Decorating it records the scorer id and the task kinds it serves, and
guards the [0,1] output contract. The router finds kernels by scanning
modules for the marker attribute, so adding a scorer means adding a
decorated function.

Example:
    @reward_kernel("counting", kinds=[TaskKind.VISUAL_COUNTING],
                   description="exact-match count")
    def score_counting(response_text: str, gold: CountGold) -> float:
        ...
"""

import functools
import inspect
import logging
import math
from dataclasses import dataclass
from types import ModuleType
from typing import Callable, Iterable

from core.errors import RewardProtocolError
from core.types import GoldSpec, TaskKind

logger = logging.getLogger("MORL.rewards")

KernelFn = Callable[[str, GoldSpec], float]


def check_reward(value: float, source: str) -> float:
    value = float(value)
    if not math.isfinite(value) or not (0.0 <= value <= 1.0):
        raise RewardProtocolError(f"{source} produced reward {value!r} outside [0,1]")
    return value


def reward_kernel(name: str, kinds: Iterable[TaskKind], description: str = ""):
    """Mark a function as the scorer for the given task kinds."""
    kinds = frozenset(kinds)

    def decorator(func: Callable) -> KernelFn:
        @functools.wraps(func)
        def wrapper(response_text: str, gold: GoldSpec) -> float:
            return check_reward(func(response_text, gold), name)

        wrapper._is_reward_kernel = True
        wrapper._scorer_id = name
        wrapper._kinds = kinds
        wrapper._description = description
        return wrapper
    return decorator


@dataclass(frozen=True)
class KernelSpec:
    scorer_id: str
    kinds: frozenset[TaskKind]
    description: str
    fn: KernelFn


def discover_kernels(module: ModuleType) -> list[KernelSpec]:
    """Collect every @reward_kernel function defined in a module."""
    found = []
    for attr_name, obj in inspect.getmembers(module, callable):
        if attr_name.startswith("_") or not getattr(obj, "_is_reward_kernel", False):
            continue
        if obj.__module__ != module.__name__:
            continue  # re-exported from another kernel module
        found.append(KernelSpec(obj._scorer_id, obj._kinds, obj._description, obj))
        logger.debug(f"Found reward kernel {obj._scorer_id} in {module.__name__}")
    return found
