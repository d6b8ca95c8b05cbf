"""
harness/policies.py — Analytically differentiable toy policies.

SoftmaxAnswerPolicy     one logit per candidate answer, per query
GaussianBoxPolicy       per-query mean box (4) with a log-std per coordinate
GaussianPointPolicy     per-query mean point (2) with one shared log-std
GaussianSpanPolicy      per-query mean span (2) with one shared log-std
PolicyBundle            concatenation of the above for mixed task streams

Gaussian means live in scale units (50 px for images, 60 s for video) so
one learning rate suits every family. Log-stds are in native units: a
log-std of -5 spreads draws by e^-5 px (or seconds). Log-probabilities are
those of a 0.01-unit cell around the draw, which keeps them <= 0 across the
allowed log-std range [-5, 2].
"""

import math
from abc import ABC, abstractmethod
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.special import log_softmax, softmax

from core.errors import PolicyMismatchError
from core.timecode import MAX_WIRE_SECONDS, format_timespan
from core.types import Query, Response, TaskKind, TimeSpan, token_count_for

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class ToyPolicy(ABC):
    """Immutable parameter vector plus the sampling and scoring rules around it."""

    def __init__(self, params: np.ndarray, version: int = 0):
        p = np.array(params, dtype=float)
        p.setflags(write=False)
        if not np.all(np.isfinite(p)):
            raise ValueError("policy parameters must be finite")
        self._params = p
        self.version = version

    @property
    def params(self) -> np.ndarray:
        return self._params

    @property
    def dim(self) -> int:
        return self._params.size

    @abstractmethod
    def supports(self, query: Query) -> bool: ...

    @abstractmethod
    def sample(self, query: Query, rng: np.random.Generator) -> Response: ...

    @abstractmethod
    def log_prob(self, query: Query, response: Response) -> float: ...

    @abstractmethod
    def grad_log_prob(self, query: Query, response: Response) -> np.ndarray: ...

    @abstractmethod
    def _rebuild(self, params: np.ndarray, version: int) -> "ToyPolicy": ...

    def project(self, params: np.ndarray) -> np.ndarray:
        return np.asarray(params, dtype=float)

    def with_params(self, params: np.ndarray) -> "ToyPolicy":
        return self._rebuild(params, self.version + 1)

    def _require(self, query: Query):
        if not self.supports(query):
            raise PolicyMismatchError(f"{type(self).__name__} cannot answer {query.kind} query '{query.id}'")


def _offsets(keys: Sequence[str], width) -> dict[str, int]:
    offsets, at = {}, 0
    for key in keys:
        offsets[key] = at
        at += width(key)
    return offsets


# ── Softmax over candidate answers ───────────────────────────────────────────

class SoftmaxAnswerPolicy(ToyPolicy):
    def __init__(
        self,
        candidates: Mapping[str, Sequence[str]],
        params: Optional[np.ndarray] = None,
        version: int = 0,
    ):
        self.candidates = {qid: tuple(texts) for qid, texts in candidates.items()}
        for qid, texts in self.candidates.items():
            if not texts:
                raise ValueError(f"query '{qid}' has no candidate answers")
        self._offsets = _offsets(list(self.candidates), lambda qid: len(self.candidates[qid]))
        total = sum(len(t) for t in self.candidates.values())
        super().__init__(np.zeros(total) if params is None else params, version)
        if self.dim != total:
            raise ValueError(f"expected {total} logits, got {self.dim}")

    def supports(self, query: Query) -> bool:
        return query.id in self.candidates

    def _slice(self, query: Query) -> slice:
        start = self._offsets[query.id]
        return slice(start, start + len(self.candidates[query.id]))

    def logits(self, query: Query) -> np.ndarray:
        self._require(query)
        return self._params[self._slice(query)]

    def probabilities(self, query: Query) -> np.ndarray:
        return softmax(self.logits(query))

    def sample(self, query: Query, rng: np.random.Generator) -> Response:
        probs = self.probabilities(query)
        k = int(rng.choice(len(probs), p=probs))
        text = self.candidates[query.id][k]
        logprob = float(log_softmax(self.logits(query))[k])
        return Response(query.id, text, token_count_for(text), logprob, (float(k),))

    def log_prob(self, query: Query, response: Response) -> float:
        return float(log_softmax(self.logits(query))[int(response.sample[0])])

    def grad_log_prob(self, query: Query, response: Response) -> np.ndarray:
        sl = self._slice(query)
        grad = np.zeros(self.dim)
        grad[sl] = -self.probabilities(query)
        grad[sl.start + int(response.sample[0])] += 1.0
        return grad

    def _rebuild(self, params: np.ndarray, version: int) -> "SoftmaxAnswerPolicy":
        return SoftmaxAnswerPolicy(self.candidates, params, version)


# ── Gaussian families ─────────────────────────────────────────────────────────

class GaussianPolicy(ToyPolicy):
    """Per-query Gaussian over a real vector. Slot "*" answers any query of a supported kind."""

    kinds: frozenset[TaskKind] = frozenset()
    mean_dim: int = 1
    shared_std: bool = True
    scale: float = 1.0
    resolution: float = 0.01

    def __init__(
        self,
        init_mean: Sequence[float],
        init_log_std: float = 0.0,
        query_ids: Sequence[str] = ("*",),
        params: Optional[np.ndarray] = None,
        version: int = 0,
    ):
        self.init_mean = tuple(float(v) for v in init_mean)
        if len(self.init_mean) != self.mean_dim:
            raise ValueError(f"{type(self).__name__} needs a {self.mean_dim}-vector mean")
        self.init_log_std = float(init_log_std)
        self.query_ids = tuple(query_ids)
        self._offsets = _offsets(self.query_ids, lambda _: self.slot_size)
        if params is None:
            slot = np.concatenate([np.asarray(self.init_mean) / self.scale, np.full(self.std_dim, self.init_log_std)])
            params = np.tile(slot, len(self.query_ids))
        super().__init__(params, version)
        if self.dim != self.slot_size * len(self.query_ids):
            raise ValueError(f"expected {self.slot_size * len(self.query_ids)} parameters, got {self.dim}")

    @property
    def std_dim(self) -> int:
        return 1 if self.shared_std else self.mean_dim

    @property
    def slot_size(self) -> int:
        return self.mean_dim + self.std_dim

    def _slot(self, query: Query) -> Optional[int]:
        if query.id in self._offsets:
            return self._offsets[query.id]
        return self._offsets.get("*")

    def supports(self, query: Query) -> bool:
        return query.kind in self.kinds and self._slot(query) is not None

    def mean_and_log_std(self, query: Query) -> tuple[np.ndarray, np.ndarray]:
        self._require(query)
        at = self._slot(query)
        return self._params[at:at + self.mean_dim], self._params[at + self.mean_dim:at + self.slot_size]

    def _log_density(self, mean: np.ndarray, log_std: np.ndarray, x: np.ndarray) -> float:
        z = (x - mean * self.scale) / np.exp(log_std)
        per_dim = -0.5 * z ** 2 - log_std - _HALF_LOG_2PI + math.log(self.resolution)
        return float(np.sum(per_dim))

    @abstractmethod
    def render(self, query: Query, x: np.ndarray) -> str: ...

    def sample(self, query: Query, rng: np.random.Generator) -> Response:
        mean, log_std = self.mean_and_log_std(query)
        x = mean * self.scale + np.exp(log_std) * rng.standard_normal(self.mean_dim)
        drawn = tuple(float(v) for v in x)
        text = self.render(query, np.asarray(drawn))
        return Response(query.id, text, token_count_for(text), self._log_density(mean, log_std, np.asarray(drawn)), drawn)

    def log_prob(self, query: Query, response: Response) -> float:
        mean, log_std = self.mean_and_log_std(query)
        return self._log_density(mean, log_std, np.asarray(response.sample))

    def grad_log_prob(self, query: Query, response: Response) -> np.ndarray:
        mean, log_std = self.mean_and_log_std(query)
        sigma = np.exp(log_std)
        z = (np.asarray(response.sample) - mean * self.scale) / sigma
        g_log_std = z ** 2 - 1.0
        grad = np.zeros(self.dim)
        at = self._slot(query)
        grad[at:at + self.mean_dim] = z * self.scale / sigma
        grad[at + self.mean_dim:at + self.slot_size] = g_log_std.sum() if self.shared_std else g_log_std
        return grad

    def project(self, params: np.ndarray) -> np.ndarray:
        p = np.array(params, dtype=float)
        for at in self._offsets.values():
            std = slice(at + self.mean_dim, at + self.slot_size)
            p[std] = np.clip(p[std], LOG_STD_MIN, LOG_STD_MAX)
        return p

    def _rebuild(self, params: np.ndarray, version: int) -> "GaussianPolicy":
        return type(self)(self.init_mean, self.init_log_std, self.query_ids, params, version)


class GaussianBoxPolicy(GaussianPolicy):
    kinds = frozenset({TaskKind.BOX_GROUNDING})
    mean_dim = 4
    shared_std = False
    scale = 50.0

    def render(self, query: Query, x: np.ndarray) -> str:
        return "[" + ", ".join(f"{v:.1f}" for v in x) + "]"


class GaussianPointPolicy(GaussianPolicy):
    kinds = frozenset({TaskKind.POINT_GROUNDING, TaskKind.GUI_GROUNDING})
    mean_dim = 2
    scale = 50.0

    def render(self, query: Query, x: np.ndarray) -> str:
        if query.kind == TaskKind.GUI_GROUNDING:
            return f'{{"action":"click","start_point":[{int(round(x[0]))},{int(round(x[1]))}]}}'
        return f"[{x[0]:.1f}, {x[1]:.1f}]"


class GaussianSpanPolicy(GaussianPolicy):
    kinds = frozenset({TaskKind.TEMPORAL_GROUNDING})
    mean_dim = 2
    scale = 60.0

    def render(self, query: Query, x: np.ndarray) -> str:
        start, end = (min(max(int(round(v)), 0), MAX_WIRE_SECONDS) for v in x)
        return f"The event happens at {format_timespan(TimeSpan(start, end))}"


# ── Composite ─────────────────────────────────────────────────────────────────

class PolicyBundle(ToyPolicy):
    """Routes each query to the first part that supports it. Parameters are concatenated."""

    def __init__(self, parts: Sequence[ToyPolicy], params: Optional[np.ndarray] = None, version: int = 0):
        if not parts:
            raise ValueError("a policy bundle needs at least one part")
        sizes = [p.dim for p in parts]
        self._bounds = np.cumsum([0] + sizes)
        if params is None:
            params = np.concatenate([p.params for p in parts])
        else:
            params = np.asarray(params, dtype=float)
            parts = [p._rebuild(params[a:b], p.version) for p, a, b in zip(parts, self._bounds[:-1], self._bounds[1:])]
        self.parts = tuple(parts)
        super().__init__(params, version)

    def _locate(self, query: Query) -> tuple[ToyPolicy, slice]:
        for i, part in enumerate(self.parts):
            if part.supports(query):
                return part, slice(int(self._bounds[i]), int(self._bounds[i + 1]))
        raise PolicyMismatchError(f"no policy in the bundle answers {query.kind} query '{query.id}'")

    def supports(self, query: Query) -> bool:
        return any(part.supports(query) for part in self.parts)

    def part_for(self, query: Query) -> ToyPolicy:
        return self._locate(query)[0]

    def sample(self, query: Query, rng: np.random.Generator) -> Response:
        return self._locate(query)[0].sample(query, rng)

    def log_prob(self, query: Query, response: Response) -> float:
        return self._locate(query)[0].log_prob(query, response)

    def grad_log_prob(self, query: Query, response: Response) -> np.ndarray:
        part, sl = self._locate(query)
        grad = np.zeros(self.dim)
        grad[sl] = part.grad_log_prob(query, response)
        return grad

    def project(self, params: np.ndarray) -> np.ndarray:
        p = np.asarray(params, dtype=float)
        return np.concatenate([
            part.project(p[int(a):int(b)]) for part, a, b in zip(self.parts, self._bounds[:-1], self._bounds[1:])
        ])

    def _rebuild(self, params: np.ndarray, version: int) -> "PolicyBundle":
        return PolicyBundle(self.parts, params, version)
