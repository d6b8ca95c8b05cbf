"""
interfaces/cli_interface.py — Command-line front end for the MORL toolkit.

One subcommand per capability:
- serve-rewards / serve-stub-rm   run the reward service or the stub reward model
- score                           score a JSONL request file in-process or via --endpoint
- train-toy / compare             toy MORL training and the on-policy vs vanilla study
- validate-gui                    trajectory hygiene report
- elo                             Bradley-Terry / Elo ratings from comparison records
- gen-tasks                       synthetic task generation

Machine output goes to the named files (or stdout for reports); status
lines go to stderr through rich when it is installed. Failures print one
`error: <kind>: <message>` line on stderr.
"""

import argparse
import asyncio
import json
import logging
import re
import sys
from pathlib import Path
from typing import Optional, Sequence

import httpx

try:
    from rich.console import Console
    from rich.table import Table
    HAS_RICH = True
except ImportError:
    HAS_RICH = False

from config.settings import Settings
from config.training import load_train_config
from core.dataset import write_queries
from core.errors import ConfigError, MorlError, RewardProtocolError, RewardTransportError
from core.types import Box, TaskKind
from gui.trajectory import validate_trajectory_lines
from harness.compare import compare_onpolicy_vs_vanilla
from harness.tasks import SyntheticTaskSpec, gen_tasks
from harness.trainer import run_morl
from preference.bradley_terry import bt_fit, elo_from_fit, style_controlled_fit
from preference.records import load_comparisons
from raas.router import RewardRouter
from raas.server import AppServer, run_until_cancelled, serve, split_bind
from raas.service import RewardService
from raas.stub_model import build_stub_app
from raas.wire import WIRE_VERSION

logger = logging.getLogger("MORL.interface.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

_SCREEN_RE = re.compile(r"^(\d+)x(\d+)$")


class CLIInterface:
    """Status output with or without rich. Never writes to stdout."""

    def __init__(self):
        self.console = Console(stderr=True) if HAS_RICH else None

    def status(self, text: str):
        if HAS_RICH:
            self.console.print(text)
        else:
            print(text, file=sys.stderr)

    def ratings(self, rows: list[tuple[str, float]], title: str):
        if not HAS_RICH:
            self.status(title)
            for i, (model, rating) in enumerate(rows, start=1):
                self.status(f"  {i:>3}  {model}  {rating:.2f}")
            return
        table = Table(title=title)
        table.add_column("rank", justify="right")
        table.add_column("model")
        table.add_column("rating", justify="right")
        for i, (model, rating) in enumerate(rows, start=1):
            table.add_row(str(i), model, f"{rating:.2f}")
        self.console.print(table)


# ── Argument types ────────────────────────────────────────────────────────────

def screen_size(value: str) -> Box:
    m = _SCREEN_RE.match(value)
    if not m or int(m.group(1)) == 0 or int(m.group(2)) == 0:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT with positive integers, got '{value}'")
    return Box(0.0, 0.0, float(m.group(1)), float(m.group(2)))


def task_kind(value: str) -> TaskKind:
    try:
        return TaskKind(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown task kind '{value}' (choose from {', '.join(TaskKind)})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="morl", description="Mixed on-policy RL toolkit")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    parser.add_argument("--env-file", default=None, help="Load settings from this .env file")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("serve-rewards", help="Run the reward service over HTTP")
    p.add_argument("--bind", default=None, help="HOST:PORT (default: RAAS_BIND)")

    p = sub.add_parser("serve-stub-rm", help="Run the stub reward model behind POST /score")
    p.add_argument("--bind", required=True, help="HOST:PORT")

    p = sub.add_parser("score", help="Score a JSONL file of reward requests")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--endpoint", default=None, help="Score against a running reward service")

    p = sub.add_parser("train-toy", help="Train a toy policy on a synthetic task mixture")
    p.add_argument("--config", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)

    p = sub.add_parser("compare", help="On-policy versus vanilla GRPO over several seeds")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", type=int, required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--seed", type=int, default=None, help="First seed (default: the config's seed)")
    p.add_argument("--steps", type=int, default=None)

    p = sub.add_parser("validate-gui", help="Check a JSONL GUI trajectory")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--screen", type=screen_size, required=True, help="WIDTHxHEIGHT")

    p = sub.add_parser("elo", help="Fit ratings from JSONL pairwise comparisons")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--style-control", action="store_true")
    p.add_argument("--l2", type=float, default=1e-6)

    p = sub.add_parser("gen-tasks", help="Generate a synthetic query set")
    p.add_argument("--kind", type=task_kind, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--difficulty", type=float, default=0.5)
    return parser


# ── Commands ──────────────────────────────────────────────────────────────────

class MalformedLine(str):
    """Decode error of a request line that is not JSON."""


def _read_request_lines(path: str) -> list:
    """Parsed JSON per non-blank line, or a MalformedLine."""
    items: list = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            try:
                items.append(json.loads(line))
            except (ValueError, RecursionError) as e:
                items.append(MalformedLine(e))
    return items


def _result_line(result: dict) -> dict:
    if "error" in result:
        return {"query_id": result.get("query_id"), "error": result["error"]}
    return {"query_id": result["query_id"], "reward": result["reward"], "scorer": result["scorer"]}


async def _score_remote(endpoint: str, payloads: list, settings: Settings) -> list[dict]:
    url = endpoint.rstrip("/") + "/reward/batch"
    try:
        async with httpx.AsyncClient(timeout=settings.raas_timeout_s) as client:
            response = await client.post(url, json={"v": WIRE_VERSION, "requests": payloads})
    except httpx.HTTPError as e:
        raise RewardTransportError(f"{url}: {type(e).__name__}: {e}")
    if response.status_code != 200:
        raise RewardProtocolError(f"{url} answered HTTP {response.status_code}")
    try:
        results = response.json()["results"]
    except (ValueError, KeyError, TypeError):
        raise RewardProtocolError(f"{url} returned a body without results")
    if not isinstance(results, list) or len(results) != len(payloads):
        raise RewardProtocolError(f"{url} returned a result list that does not match {len(payloads)} requests")
    return results


async def _score_local(payloads: list, settings: Settings) -> list[dict]:
    service = RewardService(RewardRouter(settings))
    try:
        results = await service.score_batch(payloads)
    finally:
        await service.aclose()
    return [r.to_dict() for r in results]


async def cmd_score(args, settings: Settings, ui: CLIInterface) -> int:
    items = _read_request_lines(args.input)
    payloads = [item for item in items if not isinstance(item, MalformedLine)]
    if args.endpoint:
        scored = await _score_remote(args.endpoint, payloads, settings)
    else:
        scored = await _score_local(payloads, settings)

    results, it = [], iter(scored)
    for item in items:
        if isinstance(item, MalformedLine):
            results.append({"query_id": None, "error": {"kind": "malformed_json", "detail": item}})
        else:
            results.append(_result_line(next(it)))
    Path(args.out).write_text("".join(json.dumps(r) + "\n" for r in results), encoding="utf-8")
    failures = sum(1 for r in results if "error" in r)
    ui.status(f"Scored {len(results)} requests ({failures} errors) -> {args.out}")
    return EXIT_OK


async def cmd_serve_rewards(args, settings: Settings, ui: CLIInterface) -> int:
    server = await serve(args.bind or settings.raas_bind, settings)
    ui.status(f"Reward service listening on {server.url}")
    await run_until_cancelled(server)
    return EXIT_OK


async def cmd_serve_stub(args, settings: Settings, ui: CLIInterface) -> int:
    host, port = split_bind(args.bind)
    server = await AppServer(build_stub_app(settings.stub_overlap_weight, settings.stub_length_penalty), host, port).start()
    ui.status(f"Stub reward model listening on {server.url}/score")
    await run_until_cancelled(server)
    return EXIT_OK


async def cmd_train(args, settings: Settings, ui: CLIInterface) -> int:
    config = load_train_config(args.config)
    if args.seed is not None:
        config = config.with_overrides(seed=args.seed)
    service = RewardService(RewardRouter(settings))
    try:
        log = await run_morl(config, steps=args.steps, service=service)
    finally:
        await service.aclose()

    log_path = Path(args.log)
    log_path.write_text(log.to_jsonl(), encoding="utf-8")
    summary_path = log_path.with_suffix(".summary.json")
    summary_path.write_text(json.dumps(log.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    final = log.final_eval or {}
    ui.status(
        f"Trained {log.steps_run} steps: mean reward {final.get('mean_reward', 0.0):.4f}, "
        f"pass rate {final.get('pass_rate', 0.0):.4f} -> {log_path}, {summary_path}"
    )
    if log.stopped_early:
        ui.status(f"Stopped early: {log.diagnostic}")
    return EXIT_OK


async def cmd_compare(args, settings: Settings, ui: CLIInterface) -> int:
    config = load_train_config(args.config)
    first = config.seed if args.seed is None else args.seed
    service = RewardService(RewardRouter(settings))
    try:
        report = await compare_onpolicy_vs_vanilla(
            config, steps=args.steps, seeds=list(range(first, first + args.seeds)), service=service
        )
    finally:
        await service.aclose()
    Path(args.report).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    arms = report["arms"]
    ui.status(
        f"on-policy final {arms['on_policy']['final_mean']:.4f} ± {arms['on_policy']['final_std']:.4f}, "
        f"vanilla final {arms['vanilla']['final_mean']:.4f} ± {arms['vanilla']['final_std']:.4f}, "
        f"reproduced={report['criteria']['reproduced']} -> {args.report}"
    )
    return EXIT_OK


async def cmd_validate_gui(args, settings: Settings, ui: CLIInterface) -> int:
    with open(args.input, encoding="utf-8") as f:
        report = validate_trajectory_lines(f.readlines(), args.screen)
    print(json.dumps(report.to_dict(), sort_keys=True))
    ui.status(f"{len(report.violations)} violations")
    return EXIT_OK


async def cmd_elo(args, settings: Settings, ui: CLIInterface) -> int:
    records = load_comparisons(args.input)
    fit = style_controlled_fit(records, args.l2) if args.style_control else bt_fit(records, args.l2)
    table = elo_from_fit(fit)
    out = Path(args.out)
    out.write_text(table.to_json(), encoding="utf-8")
    out.with_suffix(".txt").write_text(table.to_text(), encoding="utf-8")
    ui.ratings(table.ranked(), "Elo ratings (style-controlled)" if args.style_control else "Elo ratings")
    return EXIT_OK


async def cmd_gen_tasks(args, settings: Settings, ui: CLIInterface) -> int:
    try:
        spec = SyntheticTaskSpec(args.kind, args.n, args.difficulty, args.seed)
    except ValueError as e:
        raise ConfigError(str(e))
    queries = gen_tasks(spec)
    write_queries(queries, args.out)
    ui.status(f"Wrote {len(queries)} {args.kind} tasks -> {args.out}")
    return EXIT_OK


COMMANDS = {
    "serve-rewards": cmd_serve_rewards,
    "serve-stub-rm": cmd_serve_stub,
    "score": cmd_score,
    "train-toy": cmd_train,
    "compare": cmd_compare,
    "validate-gui": cmd_validate_gui,
    "elo": cmd_elo,
    "gen-tasks": cmd_gen_tasks,
}


def _fail(kind: str, message: str, code: int) -> int:
    print(f"error: {kind}: {' '.join(str(message).split())}", file=sys.stderr)
    return code


def dispatch(argv: Sequence[str], settings: Optional[Settings] = None) -> int:
    """Run one subcommand and return the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    if args.debug:
        logging.getLogger().setLevel(logging.DEBUG)
    ui = CLIInterface()
    try:
        if settings is None:
            settings = Settings.from_env(args.env_file)
        return asyncio.run(COMMANDS[args.command](args, settings, ui))
    except KeyboardInterrupt:
        ui.status("Interrupted")
        return EXIT_OK
    except ConfigError as e:
        return _fail(e.kind, e, EXIT_USAGE)
    except MorlError as e:
        return _fail(e.kind, e, EXIT_FAILURE)
    except OSError as e:
        return _fail("io", e, EXIT_FAILURE)
    except ValueError as e:
        return _fail("value", e, EXIT_USAGE)
