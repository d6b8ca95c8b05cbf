import json
from pathlib import Path

import pytest

from config.settings import Settings
from raas.router import RewardRouter
from raas.server import serve
from raas.service import RewardService

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def settings(monkeypatch) -> Settings:
    for name in ("RM_TEXT_ENDPOINT", "RM_MULTIMODAL_ENDPOINT", "RAAS_BIND"):
        monkeypatch.delenv(name, raising=False)
    return Settings()


@pytest.fixture
def router(settings) -> RewardRouter:
    return RewardRouter(settings)


@pytest.fixture
async def service(router):
    svc = RewardService(router)
    yield svc
    await svc.aclose()


@pytest.fixture
async def running_server(service):
    server = await serve("127.0.0.1:0", service=service)
    yield server
    await server.stop()


@pytest.fixture
def golden_requests() -> list[dict]:
    with open(FIXTURES / "golden_requests.jsonl", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


@pytest.fixture
def golden_rewards() -> list[dict]:
    with open(FIXTURES / "golden_rewards.jsonl", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
