"""
rewards/temporal.py — Temporal video grounding reward.

The prediction is the last `[mm:ss,mm:ss]` timestamp in the response; the
reward is the raw interval IoU against the gold span (no threshold).
"""

import re
from typing import Optional

from core.errors import TimespanParseError
from core.timecode import format_timespan, parse_timespan
from core.types import SpanGold, TaskKind, TimeSpan
from rewards.base import reward_kernel

__all__ = ["format_timespan", "parse_timespan", "temporal_iou_reward", "extract_timespan"]

_SPAN_IN_TEXT_RE = re.compile(r"\[[0-9]{2}:[0-9]{2},[0-9]{2}:[0-9]{2}\]")


def temporal_iou_reward(pred: Optional[TimeSpan], gold: TimeSpan) -> float:
    if pred is None:
        return 0.0
    inter = max(0, min(pred.end_s, gold.end_s) - max(pred.start_s, gold.start_s))
    union = pred.length + gold.length - inter
    if union == 0:
        # both spans are instants
        return 1.0 if pred == gold else 0.0
    return inter / union


def extract_timespan(text: str) -> Optional[TimeSpan]:
    matches = _SPAN_IN_TEXT_RE.findall(text)
    if not matches:
        return None
    try:
        return parse_timespan(matches[-1])
    except TimespanParseError:
        return None


@reward_kernel("temporal_iou", kinds=[TaskKind.TEMPORAL_GROUNDING], description="interval IoU of [mm:ss,mm:ss] spans")
def score_temporal(response_text: str, gold: SpanGold) -> float:
    return temporal_iou_reward(extract_timespan(response_text), gold.span)
