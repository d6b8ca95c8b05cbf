"""
rewards/gui.py — GUI grounding reward: does the action's start point hit the target element?
"""

from core.errors import ActionParseError
from core.types import Box, BoxGold, TaskKind
from gui.actions import ActionBase, parse_action, start_point_of
from rewards.base import reward_kernel
from rewards.grounding import point_in_box_reward


def gui_grounding_reward(action: ActionBase, gold: Box) -> float:
    point = start_point_of(action)
    if point is None:
        return 0.0
    return point_in_box_reward(point, gold)


@reward_kernel("gui_grounding", kinds=[TaskKind.GUI_GROUNDING], description="action start_point inside target box")
def score_gui(response_text: str, gold: BoxGold) -> float:
    try:
        action = parse_action(response_text.strip())
    except ActionParseError:
        return 0.0
    return gui_grounding_reward(action, gold.box)
