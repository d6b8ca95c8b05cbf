"""
config/settings.py — Runtime settings for the reward service and clients.

Values come from environment variables. A .env file is read only when a
caller names one explicitly (see Settings.from_env).
"""

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv


def _env_float(name: str, default: str) -> float:
    return float(os.getenv(name, default) or default)


def _env_int(name: str, default: str) -> int:
    return int(os.getenv(name, default) or default)


@dataclass
class Settings:
    # ── Reward service ────────────────────────────────────────────────────────
    raas_bind: str = field(default_factory=lambda: os.getenv("RAAS_BIND", "127.0.0.1:8600"))
    raas_audit_limit: int = field(default_factory=lambda: _env_int("RAAS_AUDIT_LIMIT", "1000"))

    # ── Remote reward models (empty = in-process stub scorer) ─────────────────
    rm_text_endpoint: str = field(default_factory=lambda: os.getenv("RM_TEXT_ENDPOINT", ""))
    rm_multimodal_endpoint: str = field(default_factory=lambda: os.getenv("RM_MULTIMODAL_ENDPOINT", ""))
    raas_timeout_s: float = field(default_factory=lambda: _env_float("RAAS_TIMEOUT_S", "5.0"))
    raas_max_retries: int = field(default_factory=lambda: _env_int("RAAS_MAX_RETRIES", "3"))
    raas_backoff_s: float = field(default_factory=lambda: _env_float("RAAS_BACKOFF_S", "0.05"))

    # ── Stub reward model ─────────────────────────────────────────────────────
    stub_overlap_weight: float = field(default_factory=lambda: _env_float("STUB_OVERLAP_WEIGHT", "4.0"))
    stub_length_penalty: float = field(default_factory=lambda: _env_float("STUB_LENGTH_PENALTY", "0.02"))

    log_level: str = field(default_factory=lambda: os.getenv("LOG_LEVEL", "INFO"))

    @classmethod
    def from_env(cls, env_file: Optional[str] = None) -> "Settings":
        if env_file:
            path = Path(env_file)
            if not path.is_file():
                raise ValueError(f"Configuration errors:\n  - env file not found: {env_file}")
            load_dotenv(path, override=True)
        settings = cls()
        settings.validate()
        return settings

    def validate(self):
        """Check every setting and report all problems at once."""
        errors = []

        host, sep, port = self.raas_bind.rpartition(":")
        if not sep or not host or not port.isdigit():
            errors.append(f"RAAS_BIND must look like HOST:PORT, got '{self.raas_bind}'")

        for name, url in (("RM_TEXT_ENDPOINT", self.rm_text_endpoint),
                          ("RM_MULTIMODAL_ENDPOINT", self.rm_multimodal_endpoint)):
            if url and not url.startswith(("http://", "https://")):
                errors.append(f"{name} must be an http(s) URL, got '{url}'")

        if self.raas_timeout_s <= 0:
            errors.append("RAAS_TIMEOUT_S must be positive")
        if self.raas_max_retries < 0:
            errors.append("RAAS_MAX_RETRIES must be >= 0")
        if self.raas_backoff_s < 0:
            errors.append("RAAS_BACKOFF_S must be >= 0")
        if self.raas_audit_limit < 1:
            errors.append("RAAS_AUDIT_LIMIT must be >= 1")
        if self.stub_overlap_weight < 0 or self.stub_length_penalty < 0:
            errors.append("STUB_OVERLAP_WEIGHT and STUB_LENGTH_PENALTY must be >= 0")

        if errors:
            raise ValueError("Configuration errors:\n" + "\n".join(f"  - {e}" for e in errors))

        return True

    def endpoint_for(self, scorer: str) -> str:
        return {"rm_text": self.rm_text_endpoint, "rm_multimodal": self.rm_multimodal_endpoint}.get(scorer, "")
