"""Shared utility functions for surveyopt."""

from __future__ import annotations

import datetime
import hashlib
import json
import uuid
from pathlib import Path
from typing import Any

import numpy as np
import structlog

logger = structlog.get_logger()


def generate_run_id() -> str:
    """Generate a unique run ID based on timestamp."""
    ts = datetime.datetime.now().strftime("%Y%m%d_%H%M%S")
    short_uuid = uuid.uuid4().hex[:6]
    return f"run_{ts}_{short_uuid}"


def ensure_dir(path: Path) -> Path:
    """Ensure a directory exists, creating it if necessary."""
    path.mkdir(parents=True, exist_ok=True)
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def dump_json(data: Any) -> str:
    """Serialize data as indented JSON with stable key order."""
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default)


def save_json(data: Any, path: str | Path) -> None:
    """Save data as JSON to a file."""
    path = Path(path)
    ensure_dir(path.parent)
    path.write_text(dump_json(data) + "\n", encoding="utf-8")


def load_json(path: str | Path) -> Any:
    """Load JSON data from a file."""
    return json.loads(Path(path).read_text(encoding="utf-8"))


def hash_file(path: str | Path) -> str:
    """SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def parse_range(text: str) -> tuple[int, int, int]:
    """Parse a ``LO:HI:STEP`` flag into integers.

    Raises:
        ValueError: If the text is not three positive integers with LO <= HI.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"Expected LO:HI:STEP, got {text!r}")
    try:
        lo, hi, step = (int(p) for p in parts)
    except ValueError as exc:
        raise ValueError(f"Expected integers in LO:HI:STEP, got {text!r}") from exc
    if lo < 1 or step < 1 or hi < lo:
        raise ValueError(f"Invalid range {text!r}: need 1 <= LO <= HI and STEP >= 1")
    return lo, hi, step


def split_names(text: str | None) -> list[str]:
    """Split a comma-separated flag value, dropping blanks."""
    if not text:
        return []
    return [part.strip() for part in text.split(",") if part.strip()]
