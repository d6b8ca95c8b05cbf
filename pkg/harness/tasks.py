"""
harness/tasks.py — Seeded synthetic task generators and candidate answers.

Every generator is a pure function of its SyntheticTaskSpec. Images are
1000x1000 frames, videos are at most ten minutes long. Answer-style tasks
(reasoning, counting, rlhf) also get a candidate list with the correct
answer at a hidden index, which is what the softmax toy policy chooses from.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from core.types import (
    REASONING_KINDS,
    AnswerGold,
    Box,
    BoxGold,
    CountGold,
    PreferenceOnly,
    Query,
    QuerySet,
    SpanGold,
    TaskKind,
    TimeSpan,
)

logger = logging.getLogger("MORL.harness.tasks")

FRAME = 1000
VIDEO_SECONDS = 600

_OBJECTS = ("muffins", "dogs", "cars", "birds", "chairs", "apples", "people", "boats")
_UI_LABELS = ("Submit", "Cancel", "Search", "Settings", "Back", "Next", "Save", "Share")
_TOPICS = (
    "gardening", "astronomy", "volcanoes", "baking", "sailing", "chess", "glaciers",
    "typography", "beekeeping", "origami", "telescopes", "lighthouses",
)


@dataclass(frozen=True)
class SyntheticTaskSpec:
    kind: TaskKind
    n: int
    difficulty: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not (0.0 <= self.difficulty <= 1.0):
            raise ValueError(f"difficulty must be in [0,1], got {self.difficulty}")


def _box(rng: np.random.Generator, min_side: int, max_side: int) -> Box:
    w = int(rng.integers(min_side, max_side + 1))
    h = int(rng.integers(min_side, max_side + 1))
    x1 = int(rng.integers(0, FRAME - w + 1))
    y1 = int(rng.integers(0, FRAME - h + 1))
    return Box(float(x1), float(y1), float(x1 + w), float(y1 + h))


def _counting(i: int, spec: SyntheticTaskSpec, rng: np.random.Generator) -> tuple[str, object]:
    count = int(rng.integers(0, 6 + int(14 * spec.difficulty) + 1))
    return f"How many {_OBJECTS[i % len(_OBJECTS)]} are in image #{i}?", CountGold(count)


def _reasoning(i: int, spec: SyntheticTaskSpec, rng: np.random.Generator) -> tuple[str, object]:
    top = 6 + int(24 * spec.difficulty)
    b = int(rng.integers(2, top + 1))
    a = int(rng.integers(1, 3 * b + 1))
    where = "the figure" if spec.kind == TaskKind.VISUAL_REASONING else "the text"
    return f"Using {where}, compute {a} divided by {b}.", AnswerGold(str(Fraction(a, b)))


def _box_grounding(i: int, spec: SyntheticTaskSpec, rng: np.random.Generator) -> tuple[str, object]:
    biggest = 300 - int(200 * spec.difficulty)
    return f"Locate the {_OBJECTS[i % len(_OBJECTS)][:-1]} in image #{i}.", BoxGold(_box(rng, 60, max(biggest, 61)))


def _point_grounding(i: int, spec: SyntheticTaskSpec, rng: np.random.Generator) -> tuple[str, object]:
    biggest = 240 - int(160 * spec.difficulty)
    return f"Point at the {_OBJECTS[i % len(_OBJECTS)][:-1]} in image #{i}.", BoxGold(_box(rng, 40, max(biggest, 41)))


def _gui_grounding(i: int, spec: SyntheticTaskSpec, rng: np.random.Generator) -> tuple[str, object]:
    biggest = 160 - int(100 * spec.difficulty)
    return f"Click the '{_UI_LABELS[i % len(_UI_LABELS)]}' button on screen #{i}.", BoxGold(_box(rng, 30, max(biggest, 31)))


def _temporal(i: int, spec: SyntheticTaskSpec, rng: np.random.Generator) -> tuple[str, object]:
    longest = 90 - int(70 * spec.difficulty)
    length = int(rng.integers(10, max(longest, 11) + 1))
    start = int(rng.integers(0, VIDEO_SECONDS - length))
    return f"When does event #{i} happen in the video?", SpanGold(TimeSpan(start, start + length))


def _rlhf(i: int, spec: SyntheticTaskSpec, rng: np.random.Generator) -> tuple[str, object]:
    picks = rng.choice(len(_TOPICS), size=3, replace=False)
    topics = ", ".join(_TOPICS[int(k)] for k in picks)
    medium = "this photo" if spec.kind == TaskKind.RLHF_MULTIMODAL else "a short note"
    return f"Write {medium} about {topics}.", PreferenceOnly()


_GENERATORS: dict[TaskKind, Callable] = {
    TaskKind.VISUAL_COUNTING: _counting,
    TaskKind.VISUAL_REASONING: _reasoning,
    TaskKind.TEXT_REASONING: _reasoning,
    TaskKind.BOX_GROUNDING: _box_grounding,
    TaskKind.POINT_GROUNDING: _point_grounding,
    TaskKind.GUI_GROUNDING: _gui_grounding,
    TaskKind.TEMPORAL_GROUNDING: _temporal,
    TaskKind.RLHF_TEXT: _rlhf,
    TaskKind.RLHF_MULTIMODAL: _rlhf,
}


def gen_tasks(spec: SyntheticTaskSpec) -> QuerySet:
    """Generate `spec.n` queries of one kind. Same spec, same QuerySet."""
    generator = _GENERATORS.get(spec.kind)
    if generator is None:
        raise ValueError(f"unsupported task kind: {spec.kind!r}")
    rng = np.random.default_rng(spec.seed)
    queries = []
    for i in range(spec.n):
        prompt, gold = generator(i, spec, rng)
        queries.append(Query(f"{spec.kind}-{spec.seed}-{i:04d}", spec.kind, prompt, gold))
    logger.debug(f"Generated {spec.n} {spec.kind} tasks (seed={spec.seed})")
    return QuerySet(queries)


# ── Candidate answers for the softmax policy ──────────────────────────────────

CANDIDATE_KINDS = REASONING_KINDS | {TaskKind.VISUAL_COUNTING, TaskKind.RLHF_TEXT, TaskKind.RLHF_MULTIMODAL}

_WORKING = (
    "Let me restate the problem in my own words first. ",
    "I will set up the division carefully and keep the fraction exact. ",
    "Checking: multiplying back by the divisor recovers the dividend. ",
    "Reducing the fraction by the greatest common divisor gives the simplest form. ",
)


def _reasoning_candidates(q: Query, n: int, rng: np.random.Generator) -> list[str]:
    gold = Fraction(q.gold.text)
    correct = "".join(_WORKING) + f"Therefore the answer is \\boxed{{{gold}}}."
    wrong: list[str] = []
    step = Fraction(1, gold.denominator)
    offset = 1
    while len(wrong) < n - 1:
        for candidate in (gold + offset * step, gold - offset * step):
            if candidate > 0 and len(wrong) < n - 1:
                wrong.append(f"\\boxed{{{candidate}}}")
        offset += 1
    return [correct] + wrong


def _counting_candidates(q: Query, n: int, rng: np.random.Generator) -> list[str]:
    gold = q.gold.count
    noun = q.prompt.split()[2]
    counts, offset = [], 1
    while len(counts) < n - 1:
        for c in (gold + offset, gold - offset):
            if c >= 0 and len(counts) < n - 1:
                counts.append(c)
        offset += 1
    return [f"There are {c} {noun}." for c in [gold] + counts]


def _rlhf_candidates(q: Query, n: int, rng: np.random.Generator) -> list[str]:
    on_topic = q.prompt.rstrip(".").split(" about ", 1)[-1]
    fillers = ["Sure.", "Here is something.", "I am not sure what to say about that.", "Okay, noted."]
    return [f"A note on {on_topic}."] + [fillers[k % len(fillers)] for k in range(n - 1)]


def build_candidates(q: Query, n: int, rng: np.random.Generator) -> tuple[list[str], int]:
    """Candidate answers with the correct one first-generated, then shuffled.

    Returns (candidates, index of the correct answer).
    """
    if n < 1:
        raise ValueError("need at least one candidate")
    if q.kind in REASONING_KINDS:
        texts = _reasoning_candidates(q, n, rng)
    elif q.kind == TaskKind.VISUAL_COUNTING:
        texts = _counting_candidates(q, n, rng)
    elif q.kind.is_rlhf:
        texts = _rlhf_candidates(q, n, rng)
    else:
        raise ValueError(f"{q.kind} queries are answered by a Gaussian policy, not candidates")
    order = rng.permutation(n)
    shuffled = [texts[int(k)] for k in order]
    return shuffled, int(np.flatnonzero(order == 0)[0])
