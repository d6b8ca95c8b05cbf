"""
core/types.py — Domain types shared by every MORL package.

Queries, gold specs, geometry, responses and rollout groups. Everything
except RolloutTicket is frozen after construction.
"""

import math
from dataclasses import dataclass, field, replace
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from typing import Iterator, Optional, Union


class TaskKind(StrEnum):
    VISUAL_REASONING = "visual_reasoning"
    TEXT_REASONING = "text_reasoning"
    BOX_GROUNDING = "box_grounding"
    POINT_GROUNDING = "point_grounding"
    VISUAL_COUNTING = "visual_counting"
    TEMPORAL_GROUNDING = "temporal_grounding"
    GUI_GROUNDING = "gui_grounding"
    RLHF_TEXT = "rlhf_text"
    RLHF_MULTIMODAL = "rlhf_multimodal"

    @property
    def is_rlhf(self) -> bool:
        return self in (TaskKind.RLHF_TEXT, TaskKind.RLHF_MULTIMODAL)

    @property
    def is_verifiable(self) -> bool:
        return not self.is_rlhf


REASONING_KINDS = frozenset({TaskKind.VISUAL_REASONING, TaskKind.TEXT_REASONING})


# ── Geometry ──────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in absolute pixel coordinates.

    Construction does not validate, so that bad gold can be reported by
    validate_query instead of aborting ingestion. Use violations().
    """

    x1: float
    y1: float
    x2: float
    y2: float

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return max(self.width, 0.0) * max(self.height, 0.0)

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    def contains(self, p: Point) -> bool:
        return self.x1 <= p.x <= self.x2 and self.y1 <= p.y <= self.y2

    def violations(self) -> list[str]:
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            return ["non-finite"]
        issues = []
        if self.x1 == self.x2:
            issues.append("zero-width-box")
        elif self.x1 > self.x2:
            issues.append("inverted-box")
        if self.y1 == self.y2:
            issues.append("zero-height-box")
        elif self.y1 > self.y2 and "inverted-box" not in issues:
            issues.append("inverted-box")
        return issues

    def is_valid(self) -> bool:
        return not self.violations()


@dataclass(frozen=True)
class TimeSpan:
    start_s: int
    end_s: int

    @property
    def length(self) -> int:
        return self.end_s - self.start_s

    def is_valid(self) -> bool:
        return 0 <= self.start_s <= self.end_s


# ── Gold specs ────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class AnswerGold:
    text: str


@dataclass(frozen=True)
class BoxGold:
    box: Box


@dataclass(frozen=True)
class CountGold:
    count: int


@dataclass(frozen=True)
class SpanGold:
    span: TimeSpan


@dataclass(frozen=True)
class PreferenceOnly:
    pass


GoldSpec = Union[AnswerGold, BoxGold, CountGold, SpanGold, PreferenceOnly]

GOLD_FOR_KIND: dict[TaskKind, type] = {
    TaskKind.VISUAL_REASONING: AnswerGold,
    TaskKind.TEXT_REASONING: AnswerGold,
    TaskKind.BOX_GROUNDING: BoxGold,
    TaskKind.POINT_GROUNDING: BoxGold,
    TaskKind.VISUAL_COUNTING: CountGold,
    TaskKind.TEMPORAL_GROUNDING: SpanGold,
    TaskKind.GUI_GROUNDING: BoxGold,
    TaskKind.RLHF_TEXT: PreferenceOnly,
    TaskKind.RLHF_MULTIMODAL: PreferenceOnly,
}


@dataclass(frozen=True)
class Query:
    id: str
    kind: TaskKind
    prompt: str
    gold: GoldSpec


class QuerySet:
    """Ordered, id-unique collection of queries."""

    def __init__(self, queries: Optional[list[Query]] = None):
        self._queries: tuple[Query, ...] = tuple(queries or ())
        self._by_id = {q.id: q for q in self._queries}

    def __iter__(self) -> Iterator[Query]:
        return iter(self._queries)

    def __len__(self) -> int:
        return len(self._queries)

    def __getitem__(self, index: int) -> Query:
        return self._queries[index]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, QuerySet) and self._queries == other._queries

    def __repr__(self) -> str:
        return f"QuerySet({len(self)} queries)"

    @property
    def ids(self) -> list[str]:
        return [q.id for q in self._queries]

    def get(self, query_id: str) -> Optional[Query]:
        return self._by_id.get(query_id)

    def without(self, excluded: set[str]) -> "QuerySet":
        return QuerySet([q for q in self._queries if q.id not in excluded])


# ── Rollouts ──────────────────────────────────────────────────────────────────

def approx_tokens(text: str) -> int:
    """One token per four characters, rounded up. Zero for empty text."""
    return -(-len(text) // 4)


def token_count_for(text: str) -> int:
    return max(1, approx_tokens(text))


@dataclass(frozen=True)
class Response:
    query_id: str
    text: str
    token_count: int
    logprob: float
    # raw draw the policy produced (candidate index, or the Gaussian sample)
    sample: tuple[float, ...] = ()

    def __post_init__(self):
        if self.token_count < 1:
            raise ValueError(f"token_count must be >= 1, got {self.token_count}")
        if not self.logprob <= 0.0:
            raise ValueError(f"logprob must be <= 0, got {self.logprob}")


@dataclass(eq=False)
class RolloutTicket:
    """Single-use stamp tying a rollout group to the policy version that sampled it."""

    policy_version: int
    consumed: bool = False


@dataclass(frozen=True)
class RolloutGroup:
    query: Query
    responses: tuple[Response, ...]
    rewards: tuple[float, ...] = ()
    advantages: tuple[float, ...] = ()
    degenerate: bool = False
    ticket: Optional[RolloutTicket] = field(default=None, compare=False)

    def __post_init__(self):
        g = len(self.responses)
        if g < 2:
            raise ValueError(f"a rollout group needs G >= 2 responses, got {g}")
        for name in ("rewards", "advantages"):
            values = getattr(self, name)
            if values and len(values) != g:
                raise ValueError(f"{name} has length {len(values)}, expected G={g}")
        for r in self.rewards:
            if not (0.0 <= r <= 1.0):
                raise ValueError(f"reward {r} outside [0,1]")

    @property
    def size(self) -> int:
        return len(self.responses)

    @property
    def token_counts(self) -> list[int]:
        return [r.token_count for r in self.responses]

    def with_rewards(self, rewards: list[float]) -> "RolloutGroup":
        return replace(self, rewards=tuple(float(r) for r in rewards), advantages=(), degenerate=False)

    def with_advantages(self, advantages: list[float], degenerate: bool = False) -> "RolloutGroup":
        return replace(self, advantages=tuple(float(a) for a in advantages), degenerate=degenerate)


# ── Validation results ────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ValidationIssue:
    kind: str
    detail: str = ""


@dataclass(frozen=True)
class ValidationResult:
    issues: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    @property
    def kinds(self) -> list[str]:
        return [i.kind for i in self.issues]
