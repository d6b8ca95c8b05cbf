"""
raas/service.py — Scoring front door shared by the HTTP server, the CLI and the trainer.

Handles:
- Request validation before any scorer runs
- Routing and latency measurement per call
- Per-slot error capture for batches (one failure never poisons the rest)
- An in-memory audit trail of recent scoring calls
"""

import asyncio
import logging
import time
from collections import deque
from datetime import datetime, timezone
from typing import Any, Optional, Sequence

from core.errors import MorlError, RequestValidationError, ScorerError
from raas.router import RewardRouter
from raas.wire import (
    RewardRequest,
    RewardResponse,
    ScoreFailure,
    ScoreResult,
    check_request,
    query_id_of,
    request_from_payload,
)

logger = logging.getLogger("MORL.raas.service")


class RewardService:
    def __init__(self, router: Optional[RewardRouter] = None, audit_limit: Optional[int] = None):
        self.router = router or RewardRouter()
        limit = audit_limit or self.router.settings.raas_audit_limit
        self.audit_log: deque[dict] = deque(maxlen=limit)

    async def score(self, req: RewardRequest) -> RewardResponse:
        """Validate, route and score one request.

        Raises RequestValidationError for bad requests, RewardTransportError
        when a remote scorer is unreachable, RewardProtocolError when it
        misbehaves, and ScorerError when a kernel fails unexpectedly.
        """
        check_request(req)
        scorer = self.router.route(req.kind)
        start = time.perf_counter_ns()
        try:
            reward = await self.router.score(req)
        except MorlError as e:
            self._audit(req, scorer, success=False, latency_us=(time.perf_counter_ns() - start) // 1000, error=str(e))
            logger.error(f"Scorer '{scorer}' failed for {req.query_id}: {e}")
            raise
        except Exception as e:
            self._audit(req, scorer, success=False, latency_us=(time.perf_counter_ns() - start) // 1000, error=repr(e))
            logger.exception(f"Scorer '{scorer}' crashed on {req.query_id}")
            raise ScorerError(f"scorer '{scorer}' raised {type(e).__name__}: {e}") from e
        latency_us = (time.perf_counter_ns() - start) // 1000
        self._audit(req, scorer, success=True, latency_us=latency_us)
        logger.debug(f"Scored {req.query_id} with {scorer}: {reward!r} in {latency_us}us")
        return RewardResponse(req.query_id, reward, scorer, int(latency_us))

    async def score_payload(self, payload: Any) -> RewardResponse:
        return await self.score(request_from_payload(payload))

    async def score_batch(self, reqs: Sequence[RewardRequest | dict]) -> list[ScoreResult]:
        """Score every element concurrently; results keep input order."""
        if not reqs:
            return []
        return list(await asyncio.gather(*(self._score_slot(item) for item in reqs)))

    async def _score_slot(self, item: RewardRequest | dict) -> ScoreResult:
        query_id = item.query_id if isinstance(item, RewardRequest) else query_id_of(item)
        try:
            req = item if isinstance(item, RewardRequest) else request_from_payload(item)
            return await self.score(req)
        except RequestValidationError as e:
            return ScoreFailure(query_id, "validation", str(e), e.fields)
        except MorlError as e:
            return ScoreFailure(query_id, e.kind, str(e))

    def _audit(self, req: RewardRequest, scorer: str, success: bool, latency_us: int, error: str = ""):
        entry = {
            "query_id": req.query_id,
            "kind": str(req.kind),
            "scorer": scorer,
            "success": success,
            "latency_us": latency_us,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        if error:
            entry["error"] = error
        self.audit_log.append(entry)

    def get_audit_log(self, limit: int = 50) -> list[dict]:
        """Most recent scoring calls, oldest first."""
        return list(self.audit_log)[-limit:] if limit > 0 else []

    async def aclose(self):
        await self.router.aclose()
