"""Result envelopes and their deterministic CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import ConfigError

SCHEMA = 1
DIGITS = 12
RESERVED = {"schema", "command", "version", "timestamp"}


def format_number(v) -> str:
    """12 significant digits; empty for missing values."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return ""
        if v == 0.0:
            v = 0.0  # no negative zero
        return format(v, f"#.{DIGITS}g")
    return str(v)


def _json_value(v):
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(format_number(v)) if math.isfinite(v) else None
    return str(v)


def echo_value(v) -> str:
    """Exact, round-trippable text for a configuration value."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(echo_value(x) for x in v)
    return str(v)


def timestamp(requested: bool = False) -> str | None:
    """``SOURCE_DATE_EPOCH`` if set, the current UTC time if requested, else None."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        try:
            t = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
        except ValueError:
            raise ConfigError(f"SOURCE_DATE_EPOCH must be an integer, got {epoch!r}") from None
        return t.strftime("%Y-%m-%dT%H:%M:%SZ")
    if requested:
        return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return None


@dataclass
class ResultEnvelope:
    command: str
    config: dict
    columns: list[str]
    rows: list[list]
    provenance: dict = field(default_factory=dict)
    timestamp: str | None = None
    version: str = __version__

    def header_items(self) -> list[tuple[str, str]]:
        items = [("schema", str(SCHEMA)), ("command", self.command), ("version", self.version)]
        if self.timestamp:
            items.append(("timestamp", self.timestamp))
        items += [(f"config.{k}", echo_value(v)) for k, v in sorted(self.config.items())]
        items += [(k, echo_value(v)) for k, v in self.provenance.items() if k not in RESERVED and not k.startswith("param.")]
        return items


def to_csv(env: ResultEnvelope) -> bytes:
    buf = io.StringIO(newline="")
    for k, v in env.header_items():
        buf.write(f"# {k}={v}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(env.columns)
    for row in env.rows:
        writer.writerow([format_number(v) for v in row])
    return buf.getvalue().encode("utf-8")


def to_json(env: ResultEnvelope) -> bytes:
    obj = {
        "schema": SCHEMA,
        "command": env.command,
        "version": env.version,
        "timestamp": env.timestamp,
        "config": {k: env.config[k] for k in sorted(env.config)},
        "provenance": {
            k: echo_value(v) for k, v in env.provenance.items() if k not in RESERVED and not k.startswith("param.")
        },
        "columns": list(env.columns),
        "rows": [[_json_value(v) for v in row] for row in env.rows],
    }
    return (json.dumps(obj, indent=1, ensure_ascii=False, default=_json_value) + "\n").encode("utf-8")


def emit(env: ResultEnvelope, fmt: str = "csv") -> bytes:
    if fmt == "csv":
        return to_csv(env)
    if fmt == "json":
        return to_json(env)
    raise ConfigError(f"format must be 'csv' or 'json', got {fmt!r}")


def read_csv(text: str) -> tuple[dict, list[str], list[list]]:
    """Inverse of ``to_csv``: header dict, columns and rows (floats where numeric)."""
    header = {}
    body = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            header[key] = value
        elif line.strip():
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    rows = []
    for raw in reader:
        row = []
        for c, v in zip(columns, raw):
            if c in ("error", "dims") or v == "":
                row.append(v if v != "" or c == "error" else None)
                continue
            try:
                row.append(float(v))
            except ValueError:
                row.append(v)
        rows.append(row)
    return header, columns, rows
