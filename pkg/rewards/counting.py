"""
rewards/counting.py — Exact-match counting reward.
"""

import re
from typing import Optional

from core.types import CountGold, TaskKind
from rewards.base import reward_kernel
from rewards.math_answer import extract_boxed

NUMBER_WORDS = {
    word: value
    for value, word in enumerate(
        "zero one two three four five six seven eight nine ten eleven twelve thirteen "
        "fourteen fifteen sixteen seventeen eighteen nineteen twenty".split()
    )
}

_INT_RE = re.compile(r"(?<![0-9.])[0-9]+(?![0-9]|\.[0-9])")
_COUNT_TOKEN_RE = re.compile(
    r"(?<![\w.])([0-9]+(?:\.[0-9]+)?|" + "|".join(NUMBER_WORDS) + r")(?![\w]|\.[0-9])",
    re.IGNORECASE,
)


def _to_int(digits: str) -> Optional[int]:
    try:
        return int(digits)
    except ValueError:
        # past the int conversion digit limit
        return None


def extract_count(text: str) -> Optional[int]:
    """Boxed integer if present, else the last standalone integer or number word.

    A non-integer final number is treated as no prediction.
    """
    boxed = extract_boxed(text)
    if boxed is not None:
        boxed = boxed.strip()
        if _INT_RE.fullmatch(boxed):
            return _to_int(boxed)
        return NUMBER_WORDS.get(boxed.lower())

    tokens = _COUNT_TOKEN_RE.findall(text)
    if not tokens:
        return None
    last = tokens[-1].lower()
    if last in NUMBER_WORDS:
        return NUMBER_WORDS[last]
    return _to_int(last) if _INT_RE.fullmatch(last) else None


def counting_reward(pred_count: Optional[int], gold_count: int) -> float:
    if gold_count < 0:
        raise ValueError(f"gold count must be >= 0, got {gold_count}")
    return 1.0 if pred_count is not None and pred_count == gold_count else 0.0


@reward_kernel("counting", kinds=[TaskKind.VISUAL_COUNTING], description="exact-match integer count")
def score_counting(response_text: str, gold: CountGold) -> float:
    return counting_reward(extract_count(response_text), gold.count)
