"""
core/timecode.py — The `[mm:ss,mm:ss]` timestamp wire format.

Two-digit fields, one comma, square brackets, no spaces.
"""

import re
from typing import Optional

from core.errors import TimespanParseError
from core.types import TimeSpan

_SPAN_RE = re.compile(r"\[([0-9]{2}):([0-9]{2}),([0-9]{2}):([0-9]{2})\]")
MAX_WIRE_SECONDS = 99 * 60 + 59


def read_timecodes(text: str) -> Optional[tuple[int, int]]:
    """Decode the two timecodes without checking their order."""
    m = _SPAN_RE.fullmatch(text)
    if not m:
        return None
    m1, s1, m2, s2 = (int(g) for g in m.groups())
    if s1 >= 60 or s2 >= 60:
        return None
    return 60 * m1 + s1, 60 * m2 + s2


def parse_timespan(text: str) -> TimeSpan:
    decoded = read_timecodes(text)
    if decoded is None:
        raise TimespanParseError(f"not a [mm:ss,mm:ss] timestamp: {text!r}")
    start, end = decoded
    if end < start:
        raise TimespanParseError(f"reversed span: {text!r}")
    return TimeSpan(start, end)


def format_timespan(span: TimeSpan) -> str:
    if not (0 <= span.start_s <= MAX_WIRE_SECONDS and 0 <= span.end_s <= MAX_WIRE_SECONDS):
        raise ValueError(f"span {span} does not fit the mm:ss wire format")
    a, b = divmod(span.start_s, 60), divmod(span.end_s, 60)
    return f"[{a[0]:02d}:{a[1]:02d},{b[0]:02d}:{b[1]:02d}]"
