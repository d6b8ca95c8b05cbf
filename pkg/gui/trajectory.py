"""
gui/trajectory.py — Trajectory hygiene checks.

A trajectory is an ordered list of actions, stored as JSONL (one action
per line). validate_trajectory reports problems and never aborts.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from core.errors import ActionParseError
from core.types import Box
from gui.actions import ActionBase, Finished, action_points, parse_action

logger = logging.getLogger("MORL.gui.trajectory")

Trajectory = Sequence[ActionBase]


@dataclass(frozen=True)
class TrajectoryViolation:
    index: int
    kind: str
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[TrajectoryViolation, ...] = ()
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "violations": [{"index": v.index, "kind": v.kind, "detail": v.detail} for v in self.violations],
            "counts": dict(sorted(self.counts.items())),
        }


def _make_report(violations: list[TrajectoryViolation]) -> ValidationReport:
    return ValidationReport(tuple(violations), dict(Counter(v.kind for v in violations)))


def validate_trajectory(t: Trajectory, screen: Box) -> ValidationReport:
    """Bounds check every coordinate and enforce the single trailing Finished."""
    violations: list[TrajectoryViolation] = []
    finished_at = [i for i, a in enumerate(t) if isinstance(a, Finished)]

    for i, a in enumerate(t):
        for p in action_points(a):
            if not screen.contains(p):
                violations.append(TrajectoryViolation(i, "out-of-bounds", f"{a.action} at ({p.x:g},{p.y:g})"))

    for extra in finished_at[1:]:
        violations.append(TrajectoryViolation(extra, "multiple-finished"))
    for i in finished_at:
        if i != len(t) - 1:
            violations.append(TrajectoryViolation(i, "finished-not-last"))

    violations.sort(key=lambda v: v.index)
    return _make_report(violations)


def parse_trajectory(lines: Iterable[str]) -> tuple[list[ActionBase], list[int], list[TrajectoryViolation]]:
    """Parse JSONL actions.

    Returns the actions, the line index each came from, and one violation
    per unparseable line.
    """
    actions: list[ActionBase] = []
    positions: list[int] = []
    problems: list[TrajectoryViolation] = []
    for index, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            actions.append(parse_action(line))
            positions.append(index)
        except ActionParseError as e:
            problems.append(TrajectoryViolation(index, f"unparseable:{e.reason}", str(e)))
    return actions, positions, problems


def validate_trajectory_lines(lines: Iterable[str], screen: Box) -> ValidationReport:
    """Validate a JSONL trajectory. Violation indices are line indices."""
    actions, positions, problems = parse_trajectory(lines)
    report = validate_trajectory(actions, screen)
    remapped = [replace(v, index=positions[v.index]) for v in report.violations]
    logger.debug(f"Trajectory of {len(actions)} actions: {len(report.violations)} violations, {len(problems)} unparseable")
    return _make_report(sorted(problems + remapped, key=lambda v: v.index))
