"""
core/dataset.py — JSONL query ingestion, validation and serialization.

One query per line:
    {"id": "q1", "kind": "visual_counting", "prompt": "how many", "gold": {"count": 6}}

Gold forms: {"answer": str}, {"box": [x1,y1,x2,y2]}, {"count": int},
{"span": "[mm:ss,mm:ss]"}, and {} (or no gold) for preference-only kinds.
"""

import json
import logging
from pathlib import Path
from typing import Iterable, Optional

from pydantic import BaseModel, ConfigDict, StrictInt, StrictStr, ValidationError

from core.errors import DatasetError
from core.timecode import format_timespan, read_timecodes
from core.types import (
    GOLD_FOR_KIND,
    AnswerGold,
    Box,
    BoxGold,
    CountGold,
    GoldSpec,
    PreferenceOnly,
    Query,
    QuerySet,
    SpanGold,
    TaskKind,
    TimeSpan,
    ValidationIssue,
    ValidationResult,
)

logger = logging.getLogger("MORL.dataset")


class GoldRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    answer: Optional[StrictStr] = None
    box: Optional[tuple[float, float, float, float]] = None
    count: Optional[StrictInt] = None
    span: Optional[StrictStr] = None


class QueryRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: StrictStr
    kind: TaskKind
    prompt: StrictStr = ""
    gold: Optional[GoldRecord] = None


def gold_from_record(record: Optional[GoldRecord]) -> GoldSpec:
    """Turn a wire gold object into its GoldSpec variant.

    Raises ValueError when the object names more than one variant or
    carries an unreadable span.
    """
    if record is None:
        return PreferenceOnly()
    present = [name for name in ("answer", "box", "count", "span") if getattr(record, name) is not None]
    if not present:
        return PreferenceOnly()
    if len(present) > 1:
        raise ValueError(f"gold must carry exactly one of answer/box/count/span, got {present}")
    name = present[0]
    if name == "answer":
        return AnswerGold(record.answer)
    if name == "box":
        return BoxGold(Box(*record.box))
    if name == "count":
        return CountGold(record.count)
    decoded = read_timecodes(record.span)
    if decoded is None:
        raise ValueError(f"span {record.span!r} is not in [mm:ss,mm:ss] format")
    return SpanGold(TimeSpan(*decoded))


def gold_to_dict(gold: GoldSpec) -> dict:
    if isinstance(gold, AnswerGold):
        return {"answer": gold.text}
    if isinstance(gold, BoxGold):
        return {"box": gold.box.as_list()}
    if isinstance(gold, CountGold):
        return {"count": gold.count}
    if isinstance(gold, SpanGold):
        return {"span": format_timespan(gold.span)}
    return {}


def query_to_dict(q: Query) -> dict:
    return {"id": q.id, "kind": str(q.kind), "prompt": q.prompt, "gold": gold_to_dict(q.gold)}


def validate_query(q: Query) -> ValidationResult:
    """Check that the gold variant matches the kind and the geometry is sane.

    Never raises; every problem becomes a ValidationIssue.
    """
    issues: list[ValidationIssue] = []
    if not q.id:
        issues.append(ValidationIssue("empty-id"))

    expected = GOLD_FOR_KIND[q.kind]
    if not isinstance(q.gold, expected):
        issues.append(ValidationIssue(
            "variant-mismatch",
            f"{q.kind} expects {expected.__name__}, got {type(q.gold).__name__}",
        ))
        return ValidationResult(tuple(issues))

    gold = q.gold
    if isinstance(gold, AnswerGold) and not gold.text.strip():
        issues.append(ValidationIssue("empty-answer"))
    elif isinstance(gold, BoxGold):
        issues.extend(ValidationIssue(kind, str(gold.box.as_list())) for kind in gold.box.violations())
    elif isinstance(gold, CountGold) and gold.count < 0:
        issues.append(ValidationIssue("negative-count", str(gold.count)))
    elif isinstance(gold, SpanGold):
        span = gold.span
        if span.start_s < 0 or span.end_s < 0:
            issues.append(ValidationIssue("negative-span", f"{span}"))
        elif span.end_s < span.start_s:
            issues.append(ValidationIssue("reversed-span", f"{span.start_s}s > {span.end_s}s"))
    return ValidationResult(tuple(issues))


def _parse_line(line: str, lineno: int) -> Query:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as e:
        raise DatasetError(f"malformed JSON: {e.msg}", line=lineno)
    except (ValueError, RecursionError) as e:
        raise DatasetError(f"malformed JSON: {type(e).__name__}", line=lineno)
    try:
        record = QueryRecord.model_validate(raw)
        gold = gold_from_record(record.gold)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "<root>"
        raise DatasetError(f"schema violation at {where}: {first['msg']}", line=lineno)
    except ValueError as e:
        raise DatasetError(str(e), line=lineno)
    return Query(id=record.id, kind=record.kind, prompt=record.prompt, gold=gold)


def parse_queries(lines: Iterable[str]) -> QuerySet:
    queries: list[Query] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        q = _parse_line(line, lineno)
        if q.id in seen:
            raise DatasetError(f"duplicate query id '{q.id}'", line=lineno, query_id=q.id)
        result = validate_query(q)
        if not result.ok:
            raise DatasetError(f"invalid query '{q.id}': {', '.join(result.kinds)}", line=lineno, query_id=q.id)
        seen.add(q.id)
        queries.append(q)
    return QuerySet(queries)


def load_queries(path: str | Path) -> QuerySet:
    """Load a JSONL query file, preserving file order."""
    with open(path, encoding="utf-8") as fh:
        queries = parse_queries(fh)
    logger.info(f"Loaded {len(queries)} queries from {path}")
    return queries


def dump_queries(queries: Iterable[Query]) -> str:
    return "".join(json.dumps(query_to_dict(q)) + "\n" for q in queries)


def write_queries(queries: Iterable[Query], path: str | Path) -> None:
    Path(path).write_text(dump_queries(queries), encoding="utf-8")
