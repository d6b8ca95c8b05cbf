"""
raas/stub_model.py — Deterministic stand-in for the trained reward models.

Scores rlhf requests as sigmoid(w * overlap - lambda * tokens), where
overlap is the fraction of prompt keywords the response repeats. Also
serves that scorer over HTTP (POST /score -> {"reward": x}) so the remote
reward-model path can be exercised end to end.
"""

import logging
import re

from aiohttp import web
from scipy.special import expit

from core.errors import RequestValidationError
from core.types import approx_tokens
from raas.wire import RewardRequest, request_from_payload

logger = logging.getLogger("MORL.raas.stub")

_WORD_RE = re.compile(r"[a-z0-9]+")


def keywords(text: str) -> set[str]:
    return {w for w in _WORD_RE.findall(text.lower()) if len(w) >= 3}


def stub_reward_model(req: RewardRequest, overlap_weight: float = 4.0, length_penalty: float = 0.02) -> float:
    """Reward in (0,1). An empty response scores exactly 0.5."""
    prompt_words = keywords(req.prompt)
    overlap = len(prompt_words & keywords(req.response_text)) / len(prompt_words) if prompt_words else 0.0
    return float(expit(overlap_weight * overlap - length_penalty * approx_tokens(req.response_text)))


def build_stub_app(overlap_weight: float = 4.0, length_penalty: float = 0.02) -> web.Application:
    async def handle_score(request: web.Request) -> web.Response:
        try:
            payload = await request.json()
        except (ValueError, RecursionError) as e:
            return web.json_response({"error": {"kind": "malformed_json", "detail": str(e)}}, status=400)
        try:
            req = request_from_payload(payload)
        except RequestValidationError as e:
            return web.json_response({"error": {"kind": "validation", "detail": str(e), "fields": e.fields}}, status=422)
        reward = stub_reward_model(req, overlap_weight, length_penalty)
        logger.debug(f"stub scored {req.query_id}: {reward:.4f}")
        return web.json_response({"reward": reward})

    app = web.Application()
    app.router.add_post("/score", handle_score)
    return app
