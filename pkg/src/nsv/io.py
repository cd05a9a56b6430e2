"""Deterministic CSV and manifest writers.

Every float is rendered with 17 significant digits so files round-trip the
binary values exactly and identical runs produce bit-identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def format_value(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path, header: str, rows) -> Path:
    path = Path(path)
    lines = [header]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def write_manifest(path, payload: dict) -> Path:
    """Canonical JSON manifest; no volatile fields, bit-identical across
    identical runs (timings live in a separate sidecar)."""
    path = Path(path)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path
