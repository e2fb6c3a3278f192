"""Deterministic CSV / JSON writers shared by the CLI and scripts."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


def config_hash(config) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=_default)
    return hashlib.sha256(blob.encode()).hexdigest()


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, columns, rows, config=None) -> Path:
    """CSV with a ``# config_sha256=...`` comment line, then a header row."""
    path = Path(path)
    lines = []
    if config is not None:
        lines.append(f"# config_sha256={config_hash(config)}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def write_json(path, payload, config=None) -> Path:
    path = Path(path)
    if config is not None:
        payload = {"config_sha256": config_hash(config), **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_default) + "\n")
    return path


def read_csv(path):
    """Return (columns, rows-as-float-array) skipping comment lines."""
    lines = [l for l in Path(path).read_text().splitlines() if l and not l.startswith("#")]
    columns = lines[0].split(",")
    data = [[_parse(v) for v in l.split(",")] for l in lines[1:]]
    return columns, data


def _parse(v):
    try:
        return float(v)
    except ValueError:
        return v
