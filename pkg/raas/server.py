"""
raas/server.py — HTTP front end for the reward service.

Routes:
    POST /reward        one request body  -> RewardResponse body
    POST /reward/batch  {"v":1,"requests":[...]} -> {"v":1,"results":[...]}
    GET  /health        kind -> scorer registry

Rule-based kernels run inside the request handler; only reward-model
kinds pay a further network hop. Status codes: 400 malformed JSON,
422 schema violations (with per-field diagnostics), 502 misbehaving
remote scorer, 503 unreachable remote scorer, 500 for a kernel that
crashed.
"""

import asyncio
import json
import logging
from typing import Optional

from aiohttp import web
from pydantic import ValidationError

from config.settings import Settings
from core.errors import RequestValidationError, RewardProtocolError, RewardTransportError, ScorerError
from raas.router import RewardRouter
from raas.service import RewardService
from raas.wire import WIRE_VERSION, BatchRequestBody

logger = logging.getLogger("MORL.raas.server")

SERVICE_KEY = web.AppKey("reward_service", RewardService)


def _error(status: int, kind: str, detail: str, fields: Optional[dict] = None) -> web.Response:
    body = {"error": {"kind": kind, "detail": detail}}
    if fields:
        body["error"]["fields"] = fields
    return web.json_response(body, status=status)


async def _read_json(request: web.Request):
    try:
        return await request.json()
    except (ValueError, RecursionError) as e:
        # ValueError also covers bytes invalid in the charset; RecursionError is over-deep nesting
        raise web.HTTPBadRequest(
            text=json.dumps({"error": {"kind": "malformed_json", "detail": str(e)}}),
            content_type="application/json",
        )


async def handle_reward(request: web.Request) -> web.Response:
    service = request.app[SERVICE_KEY]
    payload = await _read_json(request)
    try:
        response = await service.score_payload(payload)
    except RequestValidationError as e:
        return _error(422, "validation", str(e), e.fields)
    except RewardTransportError as e:
        return _error(503, "transport", str(e))
    except RewardProtocolError as e:
        return _error(502, "protocol", str(e))
    except ScorerError as e:
        return _error(500, "internal", str(e))
    return web.json_response(response.to_dict())


async def handle_batch(request: web.Request) -> web.Response:
    service = request.app[SERVICE_KEY]
    payload = await _read_json(request)
    try:
        body = BatchRequestBody.model_validate(payload)
    except ValidationError as e:
        fields = {".".join(str(p) for p in err["loc"]) or "<body>": err["msg"] for err in e.errors()}
        return _error(422, "validation", "batch body failed schema validation", fields)
    results = await service.score_batch(body.requests)
    return web.json_response({"v": WIRE_VERSION, "results": [r.to_dict() for r in results]})


async def handle_health(request: web.Request) -> web.Response:
    router = request.app[SERVICE_KEY].router
    return web.json_response({"status": "ok", "v": WIRE_VERSION, "routes": router.registry()})


async def handle_audit(request: web.Request) -> web.Response:
    try:
        limit = int(request.query.get("limit", "50"))
    except ValueError:
        return _error(400, "malformed_query", "limit must be an integer")
    return web.json_response({"entries": request.app[SERVICE_KEY].get_audit_log(max(limit, 0))})


def build_app(service: RewardService) -> web.Application:
    app = web.Application()
    app[SERVICE_KEY] = service
    app.router.add_post("/reward", handle_reward)
    app.router.add_post("/reward/batch", handle_batch)
    app.router.add_get("/health", handle_health)
    app.router.add_get("/audit", handle_audit)
    return app


def split_bind(bind: str) -> tuple[str, int]:
    host, sep, port = bind.rpartition(":")
    if not sep or not host or not port.isdigit():
        raise ValueError(f"bind address must look like HOST:PORT, got '{bind}'")
    return host, int(port)


class AppServer:
    """A running aiohttp application bound to one address. Port 0 picks a free port."""

    def __init__(self, app: web.Application, host: str, port: int):
        self.app = app
        self.host = host
        self.port = port
        self._runner: Optional[web.AppRunner] = None

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    async def start(self) -> "AppServer":
        self._runner = web.AppRunner(self.app, access_log=None)
        await self._runner.setup()
        site = web.TCPSite(self._runner, self.host, self.port)
        try:
            await site.start()
        except OSError:
            await self._runner.cleanup()
            raise
        self.port = self._runner.addresses[0][1]
        logger.info(f"Listening on {self.url}")
        return self

    async def stop(self):
        if self._runner is not None:
            await self._runner.cleanup()
            self._runner = None
            logger.info(f"Stopped {self.url}")


class RewardServer(AppServer):
    def __init__(self, service: RewardService, host: str, port: int):
        super().__init__(build_app(service), host, port)
        self.service = service

    async def stop(self):
        await super().stop()
        await self.service.aclose()


async def serve(bind: str, settings: Optional[Settings] = None, service: Optional[RewardService] = None) -> RewardServer:
    """Start the reward service on `bind` and return its handle."""
    host, port = split_bind(bind)
    if service is None:
        settings = settings or Settings()
        service = RewardService(RewardRouter(settings))
    server = RewardServer(service, host, port)
    await server.start()
    return server


async def run_until_cancelled(server: AppServer):
    try:
        await asyncio.Event().wait()
    finally:
        await server.stop()
