"""
rewards/grounding.py — Image grounding rewards.

Box predictions are scored by GIoU mapped affinely onto [0,1]; point
predictions by a boundary-inclusive point-in-box test. Predictions are
read from the last bracketed coordinate list in the response.
"""

import math
import re
from typing import Optional

from core.types import Box, BoxGold, Point, TaskKind
from rewards.base import reward_kernel

_NUM = r"[-+]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)"
_BOX_RE = re.compile(rf"\[\s*({_NUM})\s*,\s*({_NUM})\s*,\s*({_NUM})\s*,\s*({_NUM})\s*\]")
_POINT_RE = re.compile(rf"[\[(]\s*({_NUM})\s*,\s*({_NUM})\s*[\])]")


def _intersection(a: Box, b: Box) -> float:
    w = min(a.x2, b.x2) - max(a.x1, b.x1)
    h = min(a.y2, b.y2) - max(a.y1, b.y1)
    return max(w, 0.0) * max(h, 0.0)


def box_iou(a: Box, b: Box) -> float:
    inter = _intersection(a, b)
    union = a.area + b.area - inter
    return inter / union


def box_giou(a: Box, b: Box) -> float:
    """IoU minus the share of the enclosing hull not covered by the union. In (-1, 1]."""
    inter = _intersection(a, b)
    union = a.area + b.area - inter
    hull = (max(a.x2, b.x2) - min(a.x1, b.x1)) * (max(a.y2, b.y2) - min(a.y1, b.y1))
    penalty = max(hull - union, 0.0) / hull
    return inter / union - penalty


def box_giou_reward(pred: Optional[Box], gold: Box) -> float:
    if pred is None:
        return 0.0
    giou = box_giou(pred, gold)
    if not math.isfinite(giou):
        # coordinates large enough to overflow the areas
        return 0.0
    return min(max((giou + 1.0) / 2.0, 0.0), 1.0)


def point_in_box_reward(pred: Optional[Point], gold: Box) -> float:
    if pred is None or not pred.is_finite():
        return 0.0
    return 1.0 if gold.contains(pred) else 0.0


def parse_box(text: str) -> Optional[Box]:
    """Last `[x1,y1,x2,y2]` in the text. Degenerate geometry counts as absent."""
    matches = _BOX_RE.findall(text)
    if not matches:
        return None
    box = Box(*(float(v) for v in matches[-1]))
    return box if box.is_valid() else None


def parse_point(text: str) -> Optional[Point]:
    matches = _POINT_RE.findall(text)
    if not matches:
        return None
    point = Point(*(float(v) for v in matches[-1]))
    return point if point.is_finite() else None


@reward_kernel("box_giou", kinds=[TaskKind.BOX_GROUNDING], description="(GIoU + 1) / 2")
def score_box(response_text: str, gold: BoxGold) -> float:
    return box_giou_reward(parse_box(response_text), gold.box)


@reward_kernel("point_in_box", kinds=[TaskKind.POINT_GROUNDING], description="predicted point inside gold box")
def score_point(response_text: str, gold: BoxGold) -> float:
    return point_in_box_reward(parse_point(response_text), gold.box)
