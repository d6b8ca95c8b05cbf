"""
raas/router.py — Maps every TaskKind to exactly one scorer.

Rule-based kernels are discovered from the rewards/ modules by their
@reward_kernel marker. The two rlhf kinds go to reward-model scorers:
a remote service when an endpoint is configured, else the in-process
stub. The registry is immutable once built.
"""

import importlib
import json
import logging
from types import MappingProxyType
from typing import Optional

from config.settings import Settings
from core.types import TaskKind
from raas.remote import RemoteRewardModel
from raas.stub_model import stub_reward_model
from raas.wire import RewardRequest
from rewards.base import KernelSpec, discover_kernels

logger = logging.getLogger("MORL.raas.router")

KERNEL_MODULES = (
    "rewards.math_answer",
    "rewards.grounding",
    "rewards.counting",
    "rewards.temporal",
    "rewards.gui",
)

REWARD_MODEL_ROUTES = {
    TaskKind.RLHF_TEXT: "rm_text",
    TaskKind.RLHF_MULTIMODAL: "rm_multimodal",
}


class RewardRouter:
    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings()
        self._remote: dict[str, RemoteRewardModel] = {}
        kernels, routes = self._discover()
        self.kernels = MappingProxyType(kernels)
        self._routes = MappingProxyType(routes)

    def _discover(self) -> tuple[dict[str, KernelSpec], dict[TaskKind, str]]:
        kernels: dict[str, KernelSpec] = {}
        routes: dict[TaskKind, str] = {}
        for module_name in KERNEL_MODULES:
            module = importlib.import_module(module_name)
            for spec in discover_kernels(module):
                kernels[spec.scorer_id] = spec
                for kind in spec.kinds:
                    if kind in routes:
                        raise RuntimeError(f"{kind} claimed by both {routes[kind]} and {spec.scorer_id}")
                    routes[kind] = spec.scorer_id
        routes.update(REWARD_MODEL_ROUTES)

        missing = [str(k) for k in TaskKind if k not in routes]
        if missing:
            raise RuntimeError(f"no scorer for task kinds: {', '.join(missing)}")
        logger.info(f"Reward router ready: {len(kernels)} kernels, {len(routes)} task kinds")
        return kernels, routes

    def route(self, kind: TaskKind) -> str:
        return self._routes[TaskKind(kind)]

    def registry(self) -> dict[str, str]:
        """Kind -> scorer id, in TaskKind declaration order."""
        return {str(kind): self._routes[kind] for kind in TaskKind}

    def registry_json(self) -> bytes:
        return json.dumps(self.registry(), separators=(",", ":")).encode("utf-8")

    def describe(self) -> list[dict]:
        rows = []
        for kind in TaskKind:
            scorer = self._routes[kind]
            spec = self.kernels.get(scorer)
            if spec is not None:
                where = "in-process"
                description = spec.description
            else:
                endpoint = self.settings.endpoint_for(scorer)
                where = endpoint or "in-process stub"
                description = "reward model"
            rows.append({"kind": str(kind), "scorer": scorer, "where": where, "description": description})
        return rows

    def is_remote(self, scorer: str) -> bool:
        return scorer in REWARD_MODEL_ROUTES.values() and bool(self.settings.endpoint_for(scorer))

    def score_local(self, req: RewardRequest) -> float:
        """Score without any network hop. Remote-configured scorers fall back to the stub."""
        scorer = self.route(req.kind)
        spec = self.kernels.get(scorer)
        if spec is None:
            return stub_reward_model(req, self.settings.stub_overlap_weight, self.settings.stub_length_penalty)
        return spec.fn(req.response_text, req.gold)

    async def score(self, req: RewardRequest) -> float:
        scorer = self.route(req.kind)
        if self.is_remote(scorer):
            return await self._remote_client(scorer).score(req)
        return self.score_local(req)

    def _remote_client(self, scorer: str) -> RemoteRewardModel:
        client = self._remote.get(scorer)
        if client is None:
            client = RemoteRewardModel.from_settings(self.settings.endpoint_for(scorer), self.settings)
            self._remote[scorer] = client
        return client

    async def aclose(self):
        for client in self._remote.values():
            await client.close()
        self._remote.clear()
