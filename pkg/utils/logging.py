"""
Minimal structured logging helpers.

Usage:
    from utils.logging import get_logger
    log = get_logger(__name__)
    log.info("message", extra={"ctx": {"fold": 0, "phase": "generation"}})

Records are written as JSON lines to stderr so that CLI commands keep stdout
for their own machine-readable output.
"""

import json
import logging
import sys
from typing import Any, Dict, Optional


class _JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:  # noqa: D401
        payload: Dict[str, Any] = {
            "level": record.levelname,
            "name": record.name,
            "msg": record.getMessage(),
        }
        if record.exc_info:
            payload["exc_info"] = self.formatException(record.exc_info)
        # Accept `extra={"ctx": {...}}`
        ctx = getattr(record, "ctx", None)
        if isinstance(ctx, dict):
            payload["ctx"] = ctx
        return json.dumps(payload, ensure_ascii=False, default=str)


def _configure_root(level: Optional[str] = None) -> None:
    root = logging.getLogger()
    if getattr(root, "_gce_configured", False):
        if level:
            root.setLevel(level.upper())
        return
    root.setLevel((level or "INFO").upper())
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonFormatter())
    root.addHandler(handler)
    setattr(root, "_gce_configured", True)


def configure_logging(level: str) -> None:
    """Attach the JSON handler (once) and set the root level."""
    _configure_root(level)


def get_logger(name: str) -> logging.Logger:
    """
    Get a module logger with JSON formatting attached to the root once.
    """
    _configure_root()
    return logging.getLogger(name)
