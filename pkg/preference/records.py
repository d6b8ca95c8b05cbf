"""
preference/records.py — Pairwise comparison records and their JSONL form.

One line per comparison:

    {"a": "model-x", "b": "model-y", "winner": "a", "cov": {"length": 120.0}}

Covariates are differences, model_a's value minus model_b's.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, StrictStr, ValidationError

from core.errors import DatasetError

WINNERS = ("a", "b", "tie")


@dataclass(frozen=True)
class ComparisonRecord:
    model_a: str
    model_b: str
    winner: str
    covariates: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.model_a == self.model_b:
            raise ValueError(f"a model cannot be compared with itself ('{self.model_a}')")
        if self.winner not in WINNERS:
            raise ValueError(f"winner must be one of {WINNERS}, got '{self.winner}'")
        for name, value in self.covariates.items():
            if not math.isfinite(value):
                raise ValueError(f"covariate '{name}' is not finite")

    @property
    def outcome(self) -> float:
        """1 if model_a won, 0 if model_b won, 0.5 for a tie."""
        return {"a": 1.0, "b": 0.0, "tie": 0.5}[self.winner]


class ComparisonLine(BaseModel):
    model_config = ConfigDict(extra="forbid")

    a: StrictStr = Field(min_length=1)
    b: StrictStr = Field(min_length=1)
    winner: Literal["a", "b", "tie"]
    cov: Optional[dict[str, float]] = None


def record_to_dict(record: ComparisonRecord) -> dict:
    out: dict = {"a": record.model_a, "b": record.model_b, "winner": record.winner}
    if record.covariates:
        out["cov"] = dict(record.covariates)
    return out


def parse_comparisons(lines: Iterable[str]) -> list[ComparisonRecord]:
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            row = ComparisonLine.model_validate_json(line)
            records.append(ComparisonRecord(row.a, row.b, row.winner, dict(row.cov or {})))
        except ValidationError as e:
            first = e.errors()[0]
            where = ".".join(str(p) for p in first["loc"]) or "<line>"
            raise DatasetError(f"{where}: {first['msg']}", line=lineno)
        except ValueError as e:
            raise DatasetError(str(e), line=lineno)
    return records


def load_comparisons(path: str | Path) -> list[ComparisonRecord]:
    with open(path, encoding="utf-8") as f:
        return parse_comparisons(f)


def dump_comparisons(records: Iterable[ComparisonRecord]) -> str:
    return "".join(json.dumps(record_to_dict(r)) + "\n" for r in records)
