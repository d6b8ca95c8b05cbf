"""
raas/remote.py — Client for standalone reward-model services.

Capabilities:
- POST a reward request to a scorer endpoint and read {"reward": x}
- Retry timeouts, connection failures and 5xx answers with exponential backoff
- Keep transport failures (retriable) apart from protocol violations
"""

import asyncio
import logging
import math
from typing import Optional

import httpx

from config.settings import Settings
from core.errors import RewardProtocolError, RewardTransportError
from raas.wire import RewardRequest, request_to_payload

logger = logging.getLogger("MORL.raas.remote")

HEADERS = {"Content-Type": "application/json", "User-Agent": "morl-raas/1"}


class RemoteRewardModel:
    """One connection pool per endpoint; safe to share across concurrent scoring tasks."""

    def __init__(
        self,
        endpoint: str,
        timeout_s: float = 5.0,
        max_retries: int = 3,
        backoff_s: float = 0.05,
        client: Optional[httpx.AsyncClient] = None,
    ):
        self.endpoint = endpoint
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self._client = client or httpx.AsyncClient(headers=HEADERS, timeout=timeout_s)

    @classmethod
    def from_settings(cls, endpoint: str, settings: Settings) -> "RemoteRewardModel":
        return cls(
            endpoint,
            timeout_s=settings.raas_timeout_s,
            max_retries=settings.raas_max_retries,
            backoff_s=settings.raas_backoff_s,
        )

    async def score(self, req: RewardRequest) -> float:
        payload = request_to_payload(req)
        last_error = ""
        for attempt in range(self.max_retries + 1):
            if attempt:
                await asyncio.sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                response = await self._client.post(self.endpoint, json=payload)
            except httpx.TimeoutException as e:
                last_error = f"timeout: {e!r}"
            except httpx.TransportError as e:
                last_error = f"unreachable: {e!r}"
            else:
                if response.status_code >= 500:
                    last_error = f"HTTP {response.status_code}"
                else:
                    return self._read_reward(response)
            logger.warning(f"Reward model {self.endpoint} attempt {attempt + 1} failed ({last_error})")

        raise RewardTransportError(
            f"reward model at {self.endpoint} failed after {self.max_retries + 1} attempts: {last_error}"
        )

    def _read_reward(self, response: httpx.Response) -> float:
        if response.status_code != 200:
            raise RewardProtocolError(f"{self.endpoint} answered HTTP {response.status_code}: {response.text[:200]}")
        try:
            body = response.json()
        except ValueError:
            raise RewardProtocolError(f"{self.endpoint} answered with non-JSON body")
        reward = body.get("reward") if isinstance(body, dict) else None
        if isinstance(reward, bool) or not isinstance(reward, (int, float)):
            raise RewardProtocolError(f"{self.endpoint} answered without a numeric reward: {body!r}")
        if not math.isfinite(reward) or not (0.0 <= reward <= 1.0):
            raise RewardProtocolError(f"{self.endpoint} returned reward {reward!r} outside [0,1]")
        return float(reward)

    async def close(self):
        await self._client.aclose()


async def remote_model_score(endpoint: str, req: RewardRequest, settings: Optional[Settings] = None) -> float:
    """One-shot scoring against a standalone reward-model service."""
    model = RemoteRewardModel.from_settings(endpoint, settings or Settings())
    try:
        return await model.score(req)
    finally:
        await model.close()
