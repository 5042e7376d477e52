"""Deterministic file output and flat config parsing for the CLI.

Floats are written with repr (shortest round-trip form), JSON with sorted
keys and fixed separators, and nothing embeds timestamps, so identical
runs produce byte-identical files.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import ValidationError


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path: str, columns, rows) -> str:
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_json(path: str, obj) -> str:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def parse_value(raw: str):
    s = raw.strip()
    if s.lower() in ("true", "false"):
        return s.lower() == "true"
    if "," in s:
        return [parse_value(p) for p in s.split(",") if p.strip()]
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    return s


def dump_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return ",".join(dump_value(p) for p in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_config(path: str) -> dict:
    """Flat `key = value` file, or a manifest JSON (its config block)."""
    if not os.path.exists(path):
        raise ValidationError(f"config file not found: {path}")
    with open(path) as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        cfg = data.get("config", data)
        if not isinstance(cfg, dict):
            raise ValidationError(f"{path}: manifest has no config block")
        return dict(cfg)
    out: dict = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{ln}: expected key = value")
        key, _, raw = line.partition("=")
        out[key.strip()] = parse_value(raw)
    return out


def write_config(path: str, cfg: dict) -> str:
    with open(path, "w") as fh:
        for k in sorted(cfg):
            fh.write(f"{k} = {dump_value(cfg[k])}\n")
    return path


def write_manifest(outdir: str, cfg: dict, outputs, version: str) -> str:
    path = os.path.join(outdir, "manifest.json")
    return write_json(path, {
        "config": cfg,
        "seed": cfg.get("seed", 0),
        "artifact_version": version,
        "outputs": sorted(os.path.basename(p) for p in outputs),
    })
