"""
core/errors.py — Exception hierarchy shared by every MORL package.

Everything raised on purpose derives from MorlError so the CLI can map
failures to a one-line `error: <kind>: <message>` diagnostic.
"""

from typing import Optional


class MorlError(Exception):
    """Root of all toolkit errors."""

    kind: str = "error"


class ConfigError(MorlError, ValueError):
    kind = "config"


class DatasetError(MorlError):
    """Malformed dataset input. Carries the offending line number or id."""

    kind = "dataset"

    def __init__(self, message: str, line: Optional[int] = None, query_id: Optional[str] = None):
        self.line = line
        self.query_id = query_id
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class StaleRolloutError(MorlError):
    """A rollout group was reused, or scored by a policy other than the one that sampled it."""

    kind = "stale_rollout"


class PolicyMismatchError(MorlError, ValueError):
    kind = "policy_mismatch"


class RequestValidationError(MorlError, ValueError):
    """A reward request failed schema validation.

    `fields` maps a dotted field path to its diagnostic message.
    """

    kind = "validation"

    def __init__(self, message: str, fields: Optional[dict[str, str]] = None):
        self.fields = dict(fields or {})
        super().__init__(message)


class RewardTransportError(MorlError):
    """The reward service could not be reached. Retriable, never a zero reward."""

    kind = "transport"
    retriable = True


class RewardProtocolError(MorlError):
    """The remote scorer answered, but with something outside the wire contract."""

    kind = "protocol"


class ActionParseError(MorlError, ValueError):
    """GUI action text did not match any of the twelve action syntaxes.

    `reason` is one of: malformed_json, unknown_action, missing_field,
    invalid_field, unexpected_field.
    """

    kind = "action_parse"

    def __init__(self, reason: str, message: str, field: Optional[str] = None):
        self.reason = reason
        self.field = field
        super().__init__(f"{reason}: {message}")


class TimespanParseError(MorlError, ValueError):
    kind = "timespan_parse"


class ScorerError(MorlError):
    """A reward kernel raised something other than a toolkit error."""

    kind = "internal"
