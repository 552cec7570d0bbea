"""Report envelopes and deterministic JSON / CSV output.

Floats are written with ``%.17g`` so that a value survives a round trip
bit for bit and identical runs produce identical bytes.  JSON has no
representation for inf or nan; such values become ``null`` and the envelope
gains a flag naming the field.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._version import __version__

SCHEMA = 1


def _plain(value):
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if hasattr(value, "_asdict"):
        return dict(value._asdict())
    if hasattr(value, "value") and hasattr(value, "name") and not isinstance(value, (str, int, float)):
        return value.value
    return value


def sanitize(obj, flags, path="$"):
    """Copy of ``obj`` with non-finite floats replaced by None (one flag each)."""
    obj = _plain(obj)
    if isinstance(obj, dict):
        return {str(k): sanitize(v, flags, f"{path}.{k}") for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v, flags, f"{path}[{i}]") for i, v in enumerate(obj)]
    if isinstance(obj, float) and not math.isfinite(obj):
        flags.append(f"non-finite value {obj!r} at {path} written as null")
        return None
    return obj


def format_float(x):
    return "%.17g" % x


def _encode(obj, out, indent, level):
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = ", " if not indent else ","
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite float {obj!r} reached the encoder; sanitize first")
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(sep)
            out.append(pad)
            out.append(json.dumps(str(k), ensure_ascii=False))
            out.append(": ")
            _encode(v, out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(sep)
            out.append(pad)
            _encode(v, out, indent, level + 1)
        out.append(end + "]")
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent=2):
    """Deterministic JSON text (insertion-ordered keys, %.17g floats)."""
    out = []
    _encode(obj, out, indent, 0)
    return "".join(out) + "\n"


@dataclass
class ReportEnvelope:
    command: str
    params: dict
    results: object
    flags: list = field(default_factory=list)
    timing: dict | None = None

    def to_dict(self):
        flags = list(self.flags)
        params = sanitize(self.params, flags, "$.params")
        results = sanitize(self.results, flags, "$.results")
        out = {
            "schema": SCHEMA,
            "tool": "shapevar",
            "version": __version__,
            "command": self.command,
            "params": params,
            "results": results,
            "flags": flags,
        }
        if self.timing is not None:
            out["timing"] = sanitize(self.timing, flags, "$.timing")
        return out

    def to_json(self, indent=2):
        return dumps(self.to_dict(), indent)


def _cell(v):
    v = _plain(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return str(v)


def to_csv(header, rows):
    """CSV text; rows are mappings or sequences matching ``header``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        if isinstance(row, dict):
            row = [row.get(h) for h in header]
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()
