"""
preference/bradley_terry.py — Bradley-Terry maximum-likelihood ratings, Elo units and style control.

Every record contributes y*log(sigma(z)) + (1-y)*log(sigma(-z)) with
z = s_a - s_b (+ beta . x for style control) and y the record's outcome,
so a tie is half a win each way. The fit is batch and order-independent:
L-BFGS-B on the L2-penalized negative log-likelihood, then each connected
component of the comparison graph is shifted to mean 0.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import expit

from preference.records import ComparisonRecord

logger = logging.getLogger("MORL.preference")

ELO_BASE = 1000.0
ELO_SCALE = 400.0 / math.log(10.0)


@dataclass(frozen=True)
class RatingTable:
    ratings: dict[str, float]
    log_likelihood: float
    iterations: int
    converged: bool
    units: str = "bt"
    components: int = 1
    coefficients: dict[str, float] = field(default_factory=dict)
    diagnostics: tuple[str, ...] = ()

    def ranked(self) -> list[tuple[str, float]]:
        return sorted(self.ratings.items(), key=lambda kv: (-kv[1], kv[0]))

    def strength(self, model: str) -> float:
        r = self.ratings[model]
        return (r - ELO_BASE) / ELO_SCALE if self.units == "elo" else r

    def win_probability(self, model_a: str, model_b: str) -> float:
        return float(expit(self.strength(model_a) - self.strength(model_b)))

    def to_dict(self) -> dict:
        return {
            "units": self.units,
            "ratings": [
                {"rank": i, "model": model, "rating": rating}
                for i, (model, rating) in enumerate(self.ranked(), start=1)
            ],
            "coefficients": dict(sorted(self.coefficients.items())),
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "components": self.components,
            "diagnostics": list(self.diagnostics),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        rows = [(str(i), model, f"{rating:.2f}") for i, (model, rating) in enumerate(self.ranked(), start=1)]
        header = ("rank", "model", "rating")
        widths = [max(len(r[c]) for r in [header, *rows]) for c in range(3)]
        lines = [
            f"{r[0]:>{widths[0]}}  {r[1]:<{widths[1]}}  {r[2]:>{widths[2]}}".rstrip()
            for r in [header, *rows]
        ]
        for name, beta in sorted(self.coefficients.items()):
            lines.append(f"# coefficient {name} = {beta:.6g}")
        for note in self.diagnostics:
            lines.append(f"# {note}")
        return "\n".join(lines) + "\n"


# ── Fitting ───────────────────────────────────────────────────────────────────

def _index(records: Sequence[ComparisonRecord]) -> tuple[list[str], np.ndarray, np.ndarray, np.ndarray]:
    models = sorted({m for r in records for m in (r.model_a, r.model_b)})
    at = {m: i for i, m in enumerate(models)}
    ia = np.array([at[r.model_a] for r in records])
    ib = np.array([at[r.model_b] for r in records])
    y = np.array([r.outcome for r in records])
    return models, ia, ib, y


def _components(n_models: int, ia: np.ndarray, ib: np.ndarray) -> tuple[int, np.ndarray]:
    graph = coo_matrix((np.ones(ia.size), (ia, ib)), shape=(n_models, n_models))
    return connected_components(graph, directed=False)


def _fit(
    models: list[str],
    ia: np.ndarray,
    ib: np.ndarray,
    y: np.ndarray,
    X: np.ndarray,
    l2: float,
    max_iters: int,
) -> tuple[np.ndarray, np.ndarray, float, int, bool, int]:
    m, k, n = len(models), X.shape[1], y.size

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        s, beta = theta[:m], theta[m:]
        z = s[ia] - s[ib] + X @ beta
        ll = -(y * np.logaddexp(0.0, -z) + (1.0 - y) * np.logaddexp(0.0, z)).sum()
        r = y - expit(z)
        grad_s = np.bincount(ia, weights=r, minlength=m) - np.bincount(ib, weights=r, minlength=m)
        grad = np.concatenate([grad_s, X.T @ r])
        return (-ll + l2 * theta @ theta) / n, (-grad + 2.0 * l2 * theta) / n

    result = minimize(
        objective,
        np.zeros(m + k),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iters, "ftol": 1e-12, "gtol": 1e-8},
    )
    s, beta = result.x[:m].copy(), result.x[m:]
    n_comp, labels = _components(m, ia, ib)
    for c in range(n_comp):
        s[labels == c] -= s[labels == c].mean()

    z = s[ia] - s[ib] + X @ beta
    ll = float(-(y * np.logaddexp(0.0, -z) + (1.0 - y) * np.logaddexp(0.0, z)).sum())
    if not result.success:
        logger.warning(f"Bradley-Terry fit did not converge after {result.nit} iterations: {result.message}")
    return s, beta, ll, int(result.nit), bool(result.success), n_comp


def _require_records(records: Sequence[ComparisonRecord]):
    if not records:
        raise ValueError("cannot fit ratings from zero comparison records")


def bt_fit(records: Sequence[ComparisonRecord], l2: float = 1e-6, max_iters: int = 1000) -> RatingTable:
    """Maximize sum log sigma(s_w - s_l) - l2*|s|^2. Ratings anchored to mean 0 per component.

    Non-convergence is reported in the table (converged=False) with the best iterate.
    """
    _require_records(records)
    models, ia, ib, y = _index(records)
    s, _, ll, nit, ok, n_comp = _fit(models, ia, ib, y, np.zeros((y.size, 0)), l2, max_iters)
    diagnostics = []
    if n_comp > 1:
        diagnostics.append(f"comparison graph has {n_comp} components; each is anchored to mean 0 separately")
    if not ok:
        diagnostics.append(f"did not converge within {max_iters} iterations")
    logger.info(f"Fitted {len(models)} models from {len(records)} comparisons (ll={ll:.4f}, {nit} iterations)")
    return RatingTable(
        ratings={m: float(v) for m, v in zip(models, s)},
        log_likelihood=ll,
        iterations=nit,
        converged=ok,
        components=n_comp,
        diagnostics=tuple(diagnostics),
    )


def elo_from_fit(table: RatingTable) -> RatingTable:
    """rating_elo = 1000 + (400 / ln 10) * s. Monotone, so the ordering is unchanged."""
    if table.units == "elo":
        return table
    return RatingTable(
        ratings={m: ELO_BASE + ELO_SCALE * s for m, s in table.ratings.items()},
        log_likelihood=table.log_likelihood,
        iterations=table.iterations,
        converged=table.converged,
        units="elo",
        components=table.components,
        coefficients=dict(table.coefficients),
        diagnostics=table.diagnostics,
    )


def _active_columns(models: list[str], ia: np.ndarray, ib: np.ndarray, X: np.ndarray, names: list[str]) -> tuple[list[int], list[str]]:
    """Greedy rank check of each covariate against the model design and earlier covariates."""
    design = np.zeros((ia.size, len(models)))
    design[np.arange(ia.size), ia] = 1.0
    design[np.arange(ia.size), ib] = -1.0
    rank = np.linalg.matrix_rank(design)
    active, notes = [], []
    for j, name in enumerate(names):
        column = X[:, j:j + 1]
        if not np.any(column):
            notes.append(f"covariate '{name}' is zero on every record; coefficient pinned to 0")
            continue
        candidate = np.hstack([design, column])
        new_rank = np.linalg.matrix_rank(candidate)
        if new_rank == rank:
            notes.append(f"covariate '{name}' is collinear with the model design or earlier covariates; coefficient pinned to 0")
            continue
        design, rank = candidate, new_rank
        active.append(j)
    return active, notes


def style_controlled_fit(records: Sequence[ComparisonRecord], l2: float = 1e-6, max_iters: int = 1000) -> RatingTable:
    """Fit sigma(s_a - s_b + beta . x) with x the records' covariates.

    Degenerate or collinear covariates are pinned to 0 with a diagnostic;
    with none left this is exactly bt_fit.
    """
    _require_records(records)
    names = sorted({name for r in records for name in r.covariates})
    for lineno, r in enumerate(records, start=1):
        missing = [name for name in names if name not in r.covariates]
        if missing:
            raise ValueError(f"record {lineno} ({r.model_a} vs {r.model_b}) lacks covariates: {', '.join(missing)}")

    models, ia, ib, y = _index(records)
    X = np.array([[r.covariates[name] for name in names] for r in records], dtype=float).reshape(len(records), len(names))
    active, notes = _active_columns(models, ia, ib, X, names)
    for note in notes:
        logger.warning(note)

    if not active:
        base = bt_fit(records, l2, max_iters)
        return RatingTable(
            ratings=base.ratings,
            log_likelihood=base.log_likelihood,
            iterations=base.iterations,
            converged=base.converged,
            components=base.components,
            coefficients={name: 0.0 for name in names},
            diagnostics=tuple(notes) + base.diagnostics,
        )

    s, beta, ll, nit, ok, n_comp = _fit(models, ia, ib, y, X[:, active], l2, max_iters)
    coefficients = {name: 0.0 for name in names}
    for j, b in zip(active, beta):
        coefficients[names[j]] = float(b)
    diagnostics = list(notes)
    if n_comp > 1:
        diagnostics.append(f"comparison graph has {n_comp} components; each is anchored to mean 0 separately")
    if not ok:
        diagnostics.append(f"did not converge within {max_iters} iterations")
    return RatingTable(
        ratings={m: float(v) for m, v in zip(models, s)},
        log_likelihood=ll,
        iterations=nit,
        converged=ok,
        components=n_comp,
        coefficients=coefficients,
        diagnostics=tuple(diagnostics),
    )
