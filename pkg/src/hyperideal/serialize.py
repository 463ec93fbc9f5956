"""Deterministic file formats.

Every float is rendered with %.17g, which round-trips exactly through a
correct parser, and no data file ever contains a timestamp; wall-clock
metadata lives in the manifest sidecars, so rerunning a command with the
same inputs and configuration reproduces every data byte.
"""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone

import numpy as np


def fmt(v: float) -> str:
    if math.isnan(v) or math.isinf(v):
        raise ValueError("refusing to serialize a non-finite float")
    return format(v, ".17g")


def _render(obj, indent: int) -> str:
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        items = [_render(v, indent + 1) for v in obj]
        if not items:
            return "[]"
        if all("\n" not in s for s in items) and sum(map(len, items)) < 100:
            return "[" + ", ".join(items) + "]"
        inner = ",\n".join("  " * (indent + 1) + s for s in items)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = []
        for k, v in obj.items():
            if not isinstance(k, str):
                raise TypeError(f"JSON object keys must be strings, got {k!r}")
            parts.append("  " * (indent + 1) + json.dumps(k) + ": "
                         + _render(v, indent + 1))
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return _render(obj, 0) + "\n"


def write_json(path, obj) -> None:
    with open(path, "w") as f:
        f.write(dumps(obj))


def load_json(path):
    with open(path) as f:
        return json.load(f)


def trace_csv(trace) -> str:
    """Flow trace as delimited text: t, lengths, curvatures, sum K^2, energy."""
    n = trace.x.shape[1]
    cols = (["t"] + [f"x_{i}" for i in range(n)]
            + [f"K_{i}" for i in range(n)] + ["total_curv", "H"])
    lines = [",".join(cols)]
    for k in range(trace.t.size):
        row = ([trace.t[k]] + list(trace.x[k]) + list(trace.K[k])
               + [trace.total_curv[k], trace.H[k]])
        lines.append(",".join(fmt(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def manifest_obj(command: str, inputs: dict, config: dict, version: str,
                 started: str, finished: str) -> dict:
    return {
        "command": command,
        "inputs": inputs,
        "config": config,
        "version": version,
        "started": started,
        "finished": finished,
    }


def write_manifest(out_path, command: str, inputs: dict, config: dict,
                   version: str, started: str) -> None:
    write_json(str(out_path) + ".manifest.json",
               manifest_obj(command, inputs, config, version, started, now_iso()))
