"""
gui/actions.py — The twelve-action GUI grammar: parse, validate, serialize.

Wire form is one JSON object per action, tagged by `action`:

    {"action":"click","start_point":[100,200]}
    {"action":"press","keys":["ctrl","c"]}

Canonical serialization emits `action` first, then the remaining fields in
the order the grammar table lists them, with absent optionals omitted and
no whitespace. Coordinates are absolute pixels; integers stay integers.
"""

import json
import logging
import math
from typing import Annotated, Literal, Optional, Union

from pydantic import (
    AllowInfNan,
    BaseModel,
    ConfigDict,
    Field,
    Strict,
    StrictInt,
    StrictStr,
    TypeAdapter,
    ValidationError,
)

from core.errors import ActionParseError
from core.types import Point

logger = logging.getLogger("MORL.gui")

Coordinate = Union[StrictInt, Annotated[float, Strict(), AllowInfNan(False)]]
XY = tuple[Coordinate, Coordinate]
NonEmptyStr = Annotated[StrictStr, Field(min_length=1)]


class ActionBase(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Click(ActionBase):
    """Click at (x, y), optionally on an element labelled `text`."""

    action: Literal["click"] = "click"
    start_point: XY
    text: Optional[StrictStr] = None


class Scroll(ActionBase):
    """Scroll up/down shows content further below/above; the validator does not simulate it."""

    action: Literal["scroll"] = "scroll"
    direction: Literal["up", "down", "left", "right"]
    scroll_distance: Optional[Coordinate] = None


class Input(ActionBase):
    action: Literal["input"] = "input"
    text: StrictStr
    start_point: Optional[XY] = None


class Drag(ActionBase):
    action: Literal["drag"] = "drag"
    start_point: XY
    end_point: XY


class Open(ActionBase):
    action: Literal["open"] = "open"
    app: NonEmptyStr


class Press(ActionBase):
    action: Literal["press"] = "press"
    keys: Annotated[tuple[NonEmptyStr, ...], Field(min_length=1)]


class Finished(ActionBase):
    action: Literal["finished"] = "finished"
    status: NonEmptyStr


class LongPress(ActionBase):
    action: Literal["longpress"] = "longpress"
    start_point: XY


class Hover(ActionBase):
    # no coordinates in the grammar table
    action: Literal["hover"] = "hover"


class Select(ActionBase):
    action: Literal["select"] = "select"
    text: StrictStr


class Wait(ActionBase):
    action: Literal["wait"] = "wait"


class AppSwitch(ActionBase):
    action: Literal["appswitch"] = "appswitch"
    app: NonEmptyStr


GuiAction = Annotated[
    Union[Click, Scroll, Input, Drag, Open, Press, Finished, LongPress, Hover, Select, Wait, AppSwitch],
    Field(discriminator="action"),
]

ACTION_TYPES: dict[str, type[ActionBase]] = {
    cls.model_fields["action"].default: cls
    for cls in (Click, Scroll, Input, Drag, Open, Press, Finished, LongPress, Hover, Select, Wait, AppSwitch)
}
ACTION_NAMES = tuple(ACTION_TYPES)

_ADAPTER = TypeAdapter(GuiAction)

_ERROR_REASONS = {
    "missing": "missing_field",
    "extra_forbidden": "unexpected_field",
}


def parse_action(text: str) -> ActionBase:
    """Parse one wire action. Raises ActionParseError with a failure reason."""
    try:
        obj = json.loads(text)
    except (ValueError, TypeError, RecursionError) as e:
        # ValueError covers JSONDecodeError and over-long integer literals
        raise ActionParseError("malformed_json", str(e) or type(e).__name__)
    if not isinstance(obj, dict):
        raise ActionParseError("malformed_json", f"expected a JSON object, got {type(obj).__name__}")
    if "action" not in obj:
        raise ActionParseError("missing_field", "no 'action' field", field="action")
    name = obj["action"]
    if not isinstance(name, str) or name not in ACTION_TYPES:
        raise ActionParseError("unknown_action", f"{name!r} is not one of {', '.join(ACTION_NAMES)}", field="action")

    try:
        return _ADAPTER.validate_python(obj)
    except ValidationError as e:
        first = e.errors()[0]
        # loc starts with the union tag
        loc = [str(p) for p in first["loc"][1:]]
        field = loc[0] if loc else None
        reason = _ERROR_REASONS.get(first["type"], "invalid_field")
        raise ActionParseError(reason, f"{'.'.join(loc) or name}: {first['msg']}", field=field)


def serialize_action(a: ActionBase) -> str:
    return json.dumps(a.model_dump(mode="json", exclude_none=True), separators=(",", ":"), ensure_ascii=False)


def _coordinate(v: int | float) -> float:
    try:
        return float(v)
    except OverflowError:
        return math.inf if v > 0 else -math.inf


def _point(xy: XY) -> Point:
    return Point(_coordinate(xy[0]), _coordinate(xy[1]))


def action_points(a: ActionBase) -> list[Point]:
    """Every coordinate the action carries, in field order. Integers too large for a float read as infinite."""
    points = []
    for name in ("start_point", "end_point"):
        xy = getattr(a, name, None)
        if xy is not None:
            points.append(_point(xy))
    return points


def start_point_of(a: ActionBase) -> Optional[Point]:
    if isinstance(a, (Click, LongPress, Input, Drag)) and a.start_point is not None:
        return _point(a.start_point)
    return None
