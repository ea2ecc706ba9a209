"""ReportFile assembly, JSON serialization and schema validation.

Reports hold no timestamps or host data, floats are written with
``repr`` precision, and non-finite values become the strings ``"inf"``,
``"-inf"`` and ``"nan"``.  Equal inputs therefore give byte-identical files.
"""

from __future__ import annotations

import json
import math
from importlib import resources

import jsonschema
import numpy as np

SCHEMA_VERSION = "1.0"


def load_schema() -> dict:
    text = resources.files(__package__).joinpath("report.schema.json").read_text("utf-8")
    return json.loads(text)


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def from_real(v) -> float:
    return float(v) if isinstance(v, str) else v


def build_report(command: str, reports=(), *, seed=None, model=None, constants=None,
                 slope_tables=None, skip_counters=None, summary=None, trials=None) -> dict:
    """Assemble a ReportFile dictionary.  ``trials`` gives each report's trial index."""
    from . import __version__

    items = []
    for k, r in enumerate(reports):
        d = r.to_dict()
        if trials is not None:
            d["trial"] = int(trials[k])
        items.append(d)
    skips = dict(skip_counters or {})
    skips.setdefault("denominator_pairs", sum(_denominator_skips(r) for r in reports))
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "seed": seed,
        "model": model,
        "reports": items,
    }
    if constants is not None:
        doc["constants"] = constants
    if slope_tables is not None:
        doc["slope_tables"] = slope_tables
    doc["skip_counters"] = skips
    if summary is not None:
        doc["summary"] = summary
    return to_jsonable(doc)


def _denominator_skips(report) -> int:
    return int(report.info.get("skipped", 0)) if isinstance(report.info, dict) else 0


def validate_report(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` does not match the shipped schema."""
    jsonschema.validate(doc, load_schema())


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def fmt(x) -> str:
    """12 significant digits, the format of every human-readable table."""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def render_table(headers, rows) -> str:
    cells = [[fmt(c) for c in row] for row in rows]
    widths = [max([len(h)] + [len(r[i]) for r in cells]) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines)
