"""
raas/wire.py — Versioned JSON wire schema for reward requests and responses.

Single request body:
    {"v":1,"query_id":"q1","kind":"visual_counting","response_text":"...","gold":{"count":6}}
Response body:
    {"query_id":"q1","reward":1.0,"scorer":"counting","latency_us":42}
Batches wrap arrays: {"v":1,"requests":[...]} -> {"v":1,"results":[...]}.

`gold` is required for verifiable kinds and forbidden for rlhf kinds.
`prompt` is optional and only read by reward-model scorers.
"""

from dataclasses import dataclass, field
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, StrictStr, ValidationError, model_validator

from core.dataset import GoldRecord, gold_from_record, gold_to_dict, validate_query
from core.errors import RequestValidationError
from core.types import GoldSpec, PreferenceOnly, Query, TaskKind

WIRE_VERSION = 1


class RewardRequestBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    v: Literal[1]
    query_id: StrictStr
    kind: TaskKind
    response_text: StrictStr
    gold: Optional[GoldRecord] = None
    prompt: StrictStr = ""

    @model_validator(mode="after")
    def _gold_matches_kind(self):
        has_gold = self.gold is not None and any(
            getattr(self.gold, name) is not None for name in ("answer", "box", "count", "span")
        )
        if self.kind.is_rlhf and has_gold:
            raise ValueError(f"gold is forbidden for {self.kind}")
        if self.kind.is_verifiable and not has_gold:
            raise ValueError(f"gold is required for {self.kind}")
        return self


class BatchRequestBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    v: Literal[1]
    requests: list[Any]


@dataclass(frozen=True)
class RewardRequest:
    query_id: str
    kind: TaskKind
    response_text: str
    gold: GoldSpec = field(default_factory=PreferenceOnly)
    prompt: str = ""


@dataclass(frozen=True)
class RewardResponse:
    query_id: str
    reward: float
    scorer: str
    latency_us: int

    def to_dict(self) -> dict:
        return {"query_id": self.query_id, "reward": self.reward, "scorer": self.scorer, "latency_us": self.latency_us}


@dataclass(frozen=True)
class ScoreFailure:
    """Error slot in a batch result. kind is validation, transport, protocol or internal."""

    query_id: Optional[str]
    kind: str
    detail: str
    fields: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        error: dict[str, Any] = {"kind": self.kind, "detail": self.detail}
        if self.fields:
            error["fields"] = dict(self.fields)
        return {"query_id": self.query_id, "error": error}


ScoreResult = Union[RewardResponse, ScoreFailure]


def _field_errors(e: ValidationError) -> dict[str, str]:
    out = {}
    for err in e.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<body>"
        out.setdefault(where, err["msg"])
    return out


def check_request(req: RewardRequest) -> None:
    """Apply the gold/kind consistency rule and the gold invariants."""
    if req.kind.is_rlhf:
        if not isinstance(req.gold, PreferenceOnly):
            raise RequestValidationError("gold is forbidden for rlhf kinds", {"gold": "must be absent"})
        return
    result = validate_query(Query(req.query_id, req.kind, req.prompt, req.gold))
    if not result.ok:
        fields = {("query_id" if i.kind == "empty-id" else "gold"): i.kind for i in result.issues}
        raise RequestValidationError(f"invalid request: {', '.join(result.kinds)}", fields)


def request_from_payload(payload: Any) -> RewardRequest:
    try:
        body = RewardRequestBody.model_validate(payload)
        gold = gold_from_record(body.gold)
    except ValidationError as e:
        fields = _field_errors(e)
        raise RequestValidationError("request body failed schema validation: " + "; ".join(
            f"{k}: {v}" for k, v in fields.items()), fields)
    except ValueError as e:
        raise RequestValidationError(str(e), {"gold": str(e)})
    req = RewardRequest(body.query_id, body.kind, body.response_text, gold, body.prompt)
    check_request(req)
    return req


def request_to_payload(req: RewardRequest) -> dict:
    payload: dict[str, Any] = {
        "v": WIRE_VERSION,
        "query_id": req.query_id,
        "kind": str(req.kind),
        "response_text": req.response_text,
    }
    if not isinstance(req.gold, PreferenceOnly):
        payload["gold"] = gold_to_dict(req.gold)
    if req.prompt:
        payload["prompt"] = req.prompt
    return payload


def query_id_of(payload: Any) -> Optional[str]:
    if isinstance(payload, dict) and isinstance(payload.get("query_id"), str):
        return payload["query_id"]
    return None
