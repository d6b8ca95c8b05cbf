import asyncio
import json
import random

import httpx
import pytest
from aiohttp import web

from config.settings import Settings
from core.errors import RequestValidationError, RewardProtocolError, RewardTransportError, ScorerError
from core.types import Box, BoxGold, CountGold, TaskKind
from raas.remote import RemoteRewardModel, remote_model_score
from raas.router import RewardRouter
from raas.server import AppServer, serve, split_bind
from raas.service import RewardService
from raas.stub_model import build_stub_app, stub_reward_model
from raas.wire import RewardRequest, ScoreFailure, request_from_payload, request_to_payload

COUNTING_PAYLOAD = {
    "v": 1,
    "query_id": "muffins",
    "kind": "visual_counting",
    "response_text": "Looking closely, there are 6 muffins",
    "gold": {"count": 6},
}


def _as_golden(result: dict) -> dict:
    return {k: result[k] for k in ("query_id", "reward", "scorer")}


async def _serve_app(app: web.Application) -> AppServer:
    return await AppServer(app, "127.0.0.1", 0).start()


def _fixed_reward_app(body, status: int = 200, hits: list | None = None) -> web.Application:
    async def handler(request: web.Request) -> web.Response:
        if hits is not None:
            hits.append(1)
        return web.json_response(body, status=status)

    app = web.Application()
    app.router.add_post("/score", handler)
    return app


# ── Routing ──

@pytest.mark.parametrize("kind, scorer", [
    (TaskKind.VISUAL_COUNTING, "counting"),
    (TaskKind.RLHF_TEXT, "rm_text"),
    (TaskKind.RLHF_MULTIMODAL, "rm_multimodal"),
    (TaskKind.TEMPORAL_GROUNDING, "temporal_iou"),
    (TaskKind.TEXT_REASONING, "math_answer"),
    (TaskKind.VISUAL_REASONING, "math_answer"),
    (TaskKind.BOX_GROUNDING, "box_giou"),
    (TaskKind.POINT_GROUNDING, "point_in_box"),
    (TaskKind.GUI_GROUNDING, "gui_grounding"),
])
def test_route(router, kind, scorer):
    assert router.route(kind) == scorer


def test_registry_is_total_and_byte_stable(router, settings):
    assert list(router.registry()) == [str(k) for k in TaskKind]
    assert router.registry_json() == router.registry_json()
    assert RewardRouter(settings).registry_json() == router.registry_json()


def test_describe_marks_stub(router):
    rows = {row["kind"]: row for row in router.describe()}
    assert rows["rlhf_text"]["where"] == "in-process stub"
    assert rows["visual_counting"]["where"] == "in-process"


# ── In-process scoring ──

async def test_score_counting_example(service):
    response = await service.score_payload(COUNTING_PAYLOAD)
    assert (response.reward, response.scorer) == (1.0, "counting")
    assert response.latency_us >= 0


async def test_score_box_and_gui_examples(service):
    box = RewardRequest("b", TaskKind.BOX_GROUNDING, "[1,2,3,4]", BoxGold(Box(1, 2, 3, 4)))
    gui = RewardRequest("g", TaskKind.GUI_GROUNDING, '{"action":"wait"}', BoxGold(Box(0, 0, 50, 50)))
    assert (await service.score(box)).reward == 1.0
    assert (await service.score(gui)).reward == 0.0


async def test_golden_corpus_in_process(service, golden_requests, golden_rewards):
    assert len(golden_requests) >= 50
    assert {r["kind"] for r in golden_requests} == {str(k) for k in TaskKind}
    for payload, expected in zip(golden_requests, golden_rewards):
        response = await service.score_payload(payload)
        assert _as_golden(response.to_dict()) == expected


async def test_invalid_request_is_a_validation_error(service):
    req = RewardRequest("c", TaskKind.VISUAL_COUNTING, "3", CountGold(-1))
    with pytest.raises(RequestValidationError) as exc:
        await service.score(req)
    assert exc.value.fields == {"gold": "negative-count"}


@pytest.mark.parametrize("payload, field", [
    ({**COUNTING_PAYLOAD, "gold": None}, "<body>"),
    ({**COUNTING_PAYLOAD, "v": 2}, "v"),
    ({**COUNTING_PAYLOAD, "extra": 1}, "extra"),
    ({**COUNTING_PAYLOAD, "kind": "juggling"}, "kind"),
    ({**COUNTING_PAYLOAD, "kind": "rlhf_text"}, "<body>"),
])
def test_request_schema_violations(payload, field):
    with pytest.raises(RequestValidationError) as exc:
        request_from_payload(payload)
    assert field in exc.value.fields


def test_payload_round_trip_keeps_gold_and_prompt():
    req = request_from_payload({"v": 1, "query_id": "r", "kind": "rlhf_text", "response_text": "hi", "prompt": "p"})
    assert request_to_payload(req) == {"v": 1, "query_id": "r", "kind": "rlhf_text", "response_text": "hi", "prompt": "p"}


async def test_score_batch_empty(service):
    assert await service.score_batch([]) == []


async def test_score_batch_isolates_bad_slot(service):
    bad = {**COUNTING_PAYLOAD, "query_id": "bad", "gold": {"count": "six"}}
    results = await service.score_batch([COUNTING_PAYLOAD, bad, {**COUNTING_PAYLOAD, "query_id": "b"}])
    assert [type(r).__name__ for r in results] == ["RewardResponse", "ScoreFailure", "RewardResponse"]
    assert results[1].query_id == "bad" and results[1].kind == "validation"
    assert results[0].reward == results[2].reward == 1.0


async def test_score_batch_survives_huge_numbers(service):
    huge = {
        "v": 1,
        "query_id": "huge",
        "kind": "text_reasoning",
        "response_text": "\\boxed{1" + "0" * 400 + "}",
        "gold": {"answer": "5"},
    }
    results = await service.score_batch([COUNTING_PAYLOAD, huge])
    assert [r.reward for r in results] == [1.0, 0.0]


def _crash_on(service, monkeypatch, query_id: str):
    real = service.router.score

    async def score(req):
        if req.query_id == query_id:
            raise OverflowError("integer division result too large for a float")
        return await real(req)

    monkeypatch.setattr(service.router, "score", score)


async def test_score_batch_isolates_a_crashing_scorer(service, monkeypatch):
    _crash_on(service, monkeypatch, "boom")
    results = await service.score_batch([COUNTING_PAYLOAD, {**COUNTING_PAYLOAD, "query_id": "boom"}])
    assert results[0].reward == 1.0
    assert isinstance(results[1], ScoreFailure)
    assert results[1].query_id == "boom" and results[1].kind == "internal"
    assert "OverflowError" in results[1].detail
    assert [e["success"] for e in service.get_audit_log() if e["query_id"] == "boom"] == [False]

    with pytest.raises(ScorerError):
        await service.score_payload({**COUNTING_PAYLOAD, "query_id": "boom"})


async def test_score_batch_matches_sequential(service, golden_requests):
    sequential = [(await service.score_payload(p)).reward for p in golden_requests]
    batched = await service.score_batch(golden_requests)
    assert [r.reward for r in batched] == sequential


async def test_score_batch_permutation_invariant(service, golden_requests):
    base = {r.query_id: r.reward for r in await service.score_batch(golden_requests)}
    shuffled = list(golden_requests)
    random.Random(5).shuffle(shuffled)
    results = await service.score_batch(shuffled)
    assert [r.query_id for r in results] == [p["query_id"] for p in shuffled]
    assert {r.query_id: r.reward for r in results} == base


async def test_audit_log_records_calls(router):
    svc = RewardService(router, audit_limit=2)
    for i in range(3):
        await svc.score_payload({**COUNTING_PAYLOAD, "query_id": f"q{i}"})
    log = svc.get_audit_log()
    assert [e["query_id"] for e in log] == ["q1", "q2"]
    assert all(e["success"] for e in log)


# ── Stub reward model ──

def test_stub_examples():
    prompt = "Write a short note about rivers, bridges, ferries."
    empty = RewardRequest("s", TaskKind.RLHF_TEXT, "", prompt=prompt)
    echo = RewardRequest("s", TaskKind.RLHF_TEXT, prompt, prompt=prompt)
    assert stub_reward_model(empty) == 0.5
    assert stub_reward_model(echo) > stub_reward_model(empty)
    assert stub_reward_model(echo) == stub_reward_model(echo)
    long = RewardRequest("s", TaskKind.RLHF_TEXT, "blah " * 400, prompt=prompt)
    assert 0.0 < stub_reward_model(long) < 0.5


# ── HTTP ──

async def test_health_lists_registry(running_server, router):
    async with httpx.AsyncClient(base_url=running_server.url) as client:
        first = await client.get("/health")
        second = await client.get("/health")
    assert first.status_code == 200
    assert first.content == second.content
    assert first.json() == {"status": "ok", "v": 1, "routes": router.registry()}


async def test_audit_endpoint(running_server):
    async with httpx.AsyncClient(base_url=running_server.url) as client:
        await client.post("/reward", json=COUNTING_PAYLOAD)
        await client.post("/reward", json={**COUNTING_PAYLOAD, "query_id": "second"})
        latest = await client.get("/audit", params={"limit": 1})
        bad = await client.get("/audit", params={"limit": "many"})
    assert [e["query_id"] for e in latest.json()["entries"]] == ["second"]
    assert latest.json()["entries"][0]["scorer"] == "counting"
    assert bad.status_code == 400


async def test_http_single_reward(running_server):
    async with httpx.AsyncClient(base_url=running_server.url) as client:
        response = await client.post("/reward", json=COUNTING_PAYLOAD)
    assert response.status_code == 200
    assert _as_golden(response.json()) == {"query_id": "muffins", "reward": 1.0, "scorer": "counting"}


async def test_http_crashing_scorer_is_an_internal_error(running_server, service, monkeypatch):
    _crash_on(service, monkeypatch, "boom")
    async with httpx.AsyncClient(base_url=running_server.url) as client:
        single = await client.post("/reward", json={**COUNTING_PAYLOAD, "query_id": "boom"})
        batch = await client.post("/reward/batch", json={"v": 1, "requests": [COUNTING_PAYLOAD, {**COUNTING_PAYLOAD, "query_id": "boom"}]})
    assert single.status_code == 500
    assert single.json()["error"]["kind"] == "internal"
    assert batch.status_code == 200
    results = batch.json()["results"]
    assert results[0]["reward"] == 1.0
    assert results[1]["error"]["kind"] == "internal"


async def test_http_golden_corpus_sequential(running_server, golden_requests, golden_rewards):
    async with httpx.AsyncClient(base_url=running_server.url) as client:
        for payload, expected in zip(golden_requests, golden_rewards):
            response = await client.post("/reward", json=payload)
            assert _as_golden(response.json()) == expected


async def test_http_golden_corpus_under_concurrent_clients(running_server, golden_requests, golden_rewards):
    async def one_client(seed: int) -> list[tuple[dict, dict]]:
        order = list(range(len(golden_requests)))
        random.Random(seed).shuffle(order)
        seen = []
        async with httpx.AsyncClient(base_url=running_server.url, timeout=30.0) as client:
            for i in order:
                response = await client.post("/reward", content=json.dumps(golden_requests[i]))
                seen.append((_as_golden(response.json()), golden_rewards[i]))
        return seen

    outcomes = await asyncio.gather(*(one_client(seed) for seed in range(64)))
    mismatches = [pair for client in outcomes for pair in client if pair[0] != pair[1]]
    assert mismatches == []


async def test_http_batch(running_server, golden_requests, golden_rewards):
    bad = {"v": 1, "query_id": "x", "kind": "box_grounding", "response_text": "[0,0,1,1]"}
    async with httpx.AsyncClient(base_url=running_server.url) as client:
        response = await client.post("/reward/batch", json={"v": 1, "requests": golden_requests + [bad]})
        empty = await client.post("/reward/batch", json={"v": 1, "requests": []})
    results = response.json()["results"]
    assert [_as_golden(r) for r in results[:-1]] == golden_rewards
    assert results[-1]["query_id"] == "x"
    assert results[-1]["error"]["kind"] == "validation"
    assert empty.json() == {"v": 1, "results": []}


@pytest.mark.parametrize("path, body, status", [
    ("/reward", "{not json", 400),
    ("/reward", json.dumps({**COUNTING_PAYLOAD, "gold": None}), 422),
    ("/reward", json.dumps({"v": 1}), 422),
    ("/reward/batch", "[", 400),
    ("/reward/batch", json.dumps({"requests": []}), 422),
    ("/reward", b'{"v":1,"query_id":"\xff"}', 400),
    ("/reward", "[" * 100_000 + "]" * 100_000, 400),
])
async def test_http_malformed_bodies(running_server, path, body, status):
    async with httpx.AsyncClient(base_url=running_server.url) as client:
        response = await client.post(path, content=body, headers={"Content-Type": "application/json"})
    assert response.status_code == status
    payload = response.json()
    assert "reward" not in payload
    assert "error" in payload


def test_split_bind():
    assert split_bind("127.0.0.1:0") == ("127.0.0.1", 0)
    with pytest.raises(ValueError):
        split_bind("localhost")


# ── Remote reward models ──

async def test_remote_unreachable_is_transport_error():
    model = RemoteRewardModel("http://127.0.0.1:1/score", timeout_s=0.5, max_retries=1, backoff_s=0.0)
    try:
        with pytest.raises(RewardTransportError):
            await model.score(RewardRequest("r", TaskKind.RLHF_TEXT, "hello"))
    finally:
        await model.close()


async def test_remote_out_of_range_is_protocol_error():
    server = await _serve_app(_fixed_reward_app({"reward": 1.7}))
    try:
        with pytest.raises(RewardProtocolError):
            await remote_model_score(f"{server.url}/score", RewardRequest("r", TaskKind.RLHF_TEXT, "hello"))
    finally:
        await server.stop()


@pytest.mark.parametrize("body", [{"score": 0.5}, {"reward": True}, {"reward": "0.5"}, [0.5]])
async def test_remote_malformed_answers_are_protocol_errors(body):
    server = await _serve_app(_fixed_reward_app(body))
    try:
        with pytest.raises(RewardProtocolError):
            await remote_model_score(f"{server.url}/score", RewardRequest("r", TaskKind.RLHF_TEXT, "hello"))
    finally:
        await server.stop()


async def test_remote_server_errors_are_retried():
    hits: list[int] = []
    server = await _serve_app(_fixed_reward_app({"error": "busy"}, status=503, hits=hits))
    model = RemoteRewardModel(f"{server.url}/score", max_retries=2, backoff_s=0.0)
    try:
        with pytest.raises(RewardTransportError):
            await model.score(RewardRequest("r", TaskKind.RLHF_TEXT, "hello"))
    finally:
        await model.close()
        await server.stop()
    assert len(hits) == 3


async def test_router_uses_remote_stub_when_configured(settings):
    stub = await _serve_app(build_stub_app())
    remote_settings = Settings(rm_text_endpoint=f"{stub.url}/score")
    svc = RewardService(RewardRouter(remote_settings))
    req = RewardRequest("r", TaskKind.RLHF_TEXT, "rivers and bridges", prompt="a note about rivers, bridges")
    try:
        assert svc.router.is_remote("rm_text")
        response = await svc.score(req)
    finally:
        await svc.aclose()
        await stub.stop()
    assert response.scorer == "rm_text"
    assert response.reward == stub_reward_model(req)


async def test_server_maps_remote_failures_to_status_codes(settings):
    bad_model = await _serve_app(_fixed_reward_app({"reward": 1.7}))
    remote_settings = Settings(
        rm_text_endpoint=f"{bad_model.url}/score",
        rm_multimodal_endpoint="http://127.0.0.1:1/score",
        raas_max_retries=0,
        raas_timeout_s=0.5,
    )
    server = await serve("127.0.0.1:0", settings=remote_settings)
    body = {"v": 1, "query_id": "r", "response_text": "hello"}
    try:
        async with httpx.AsyncClient(base_url=server.url) as client:
            protocol = await client.post("/reward", json={**body, "kind": "rlhf_text"})
            transport = await client.post("/reward", json={**body, "kind": "rlhf_multimodal"})
            batch = await client.post("/reward/batch", json={"v": 1, "requests": [
                {**body, "kind": "rlhf_multimodal"}, COUNTING_PAYLOAD,
            ]})
    finally:
        await server.stop()
        await bad_model.stop()
    assert protocol.status_code == 502
    assert transport.status_code == 503
    results = batch.json()["results"]
    assert results[0]["error"]["kind"] == "transport"
    assert results[1]["reward"] == 1.0


def test_score_failure_dict_shape():
    failure = ScoreFailure("q", "validation", "bad", {"gold": "missing"})
    assert failure.to_dict() == {"query_id": "q", "error": {"kind": "validation", "detail": "bad", "fields": {"gold": "missing"}}}
    assert ScoreFailure(None, "transport", "down").to_dict() == {"query_id": None, "error": {"kind": "transport", "detail": "down"}}
