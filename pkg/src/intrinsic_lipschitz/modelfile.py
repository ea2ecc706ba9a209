"""Model files: JSON documents describing a model, its sections, weights and checks.

Layout::

    {
      "model":    {"kind": ..., "params": {...}, "grid": {"axes": [[lo, hi, step], ...]}
                                                 | {"points": [[...], ...]}},
      "sections": {name: {"kind": "expr" | "table" | "signs" | "offsets", "payload": ...}},
      "weights":  {name: "<expr>" | [v0, v1, ...]},
      "checks":   [{"prop": ..., "args": {...}}]
    }

Unknown keys are rejected.  Errors carry a JSON path (and line/column for
malformed JSON).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .expr import ExprEvalError, ExprSyntaxError, compile_expression
from .models import GridSpec, MAX_BASE_POINTS
from .quotient import (
    AbsValueModel,
    CircleModel,
    ExplicitModel,
    HeisenbergModel,
    LinearProjectionModel,
)
from .sections import Section, SectionError, WeightFunction

PROPS = (
    "chain",
    "leibniz",
    "affine",
    "convex-membership",
    "ils-set-convex",
    "product",
    "square",
    "inverse",
    "maxmin",
    "strong-leibniz",
    "strong-product",
    "equivalence-families",
    "vector-closure",
)

# argument names per proposition: (required, optional)
_COMMON_OPT = {"tol", "sched", "variant"}
CHECK_ARGS = {
    "chain": ({"phi", "at"}, set()),
    "leibniz": ({"phi", "psi", "f", "at"}, set()),
    "affine": ({"phi", "psi", "alpha", "beta", "at"}, set()),
    "convex-membership": ({"phi", "psi", "f", "at"}, set()),
    "ils-set-convex": ({"psi", "phi1", "phi2", "at", "t"}, set()),
    "product": ({"phi", "psi", "at"}, set()),
    "square": ({"phi", "at"}, set()),
    "inverse": ({"phi", "eps"}, set()),
    "maxmin": ({"phi", "psi"}, set()),
    "strong-leibniz": ({"phi", "psi", "t"}, set()),
    "strong-product": ({"phi", "M"}, {"c", "local"}),
    "equivalence-families": ({"phi"}, {"L", "family"}),
    "vector-closure": ({"psi", "at", "phi1", "lambda1", "phi2", "lambda2"}, set()),
}
SECTION_ARGS = {"phi", "psi", "phi1", "phi2"}


class ModelFileError(ValueError):
    def __init__(self, message: str, path: str = "", line: int | None = None,
                 column: int | None = None):
        where = path or "<document>"
        if line is not None:
            where += f" (line {line}, column {column})"
        super().__init__(f"{where}: {message}")
        self.path, self.line, self.column = path, line, column


@dataclass
class Workspace:
    model: object
    sections: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    document: dict = field(default_factory=dict)


def _keys(obj, allowed, path, required=()):
    if not isinstance(obj, dict):
        raise ModelFileError("expected an object", path)
    extra = set(obj) - set(allowed)
    if extra:
        raise ModelFileError(f"unknown key(s) {sorted(extra)}", path)
    missing = set(required) - set(obj)
    if missing:
        raise ModelFileError(f"missing key(s) {sorted(missing)}", path)


def grid_from_spec(grid: dict, path="model.grid"):
    _keys(grid, {"axes", "points", "refine"}, path)
    if ("axes" in grid) == ("points" in grid):
        raise ModelFileError("give exactly one of 'axes' or 'points'", path)
    if "points" in grid:
        pts = np.asarray(grid["points"], float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if len(pts) > MAX_BASE_POINTS:
            raise ModelFileError(f"more than {MAX_BASE_POINTS} base points", path)
        return pts, None
    try:
        spec = GridSpec.from_dict(grid)
    except (ValueError, KeyError, TypeError) as exc:
        raise ModelFileError(str(exc), path) from exc
    return spec.points(), spec


def model_from_spec(spec: dict):
    _keys(spec, {"kind", "params", "grid"}, "model", required={"kind", "grid"})
    kind = spec["kind"]
    params = dict(spec.get("params", {}))
    base, gs = grid_from_spec(spec["grid"])
    path = "model.params"
    try:
        if kind == "linear-projection":
            _keys(params, {"n", "k", "p"}, path, required={"n", "k"})
            p = params.get("p", 2)
            p = float("inf") if p in ("inf", "Infinity") else float(p)
            return LinearProjectionModel(int(params["n"]), int(params["k"]), p, base, gs)
        if kind == "abs-value":
            _keys(params, {"eps", "R"}, path, required={"eps", "R"})
            return AbsValueModel(float(params["eps"]), float(params["R"]), base, gs)
        if kind == "circle":
            _keys(params, set(), path)
            return CircleModel(base, gs)
        if kind == "heisenberg":
            _keys(params, {"factor", "oracle"}, path)
            return HeisenbergModel(base, gs, factor=float(params.get("factor", 16.0)),
                                   oracle=params.get("oracle", "ternary"))
        if kind == "explicit":
            _keys(params, {"x_points", "proj", "p", "open"}, path, required={"x_points", "proj"})
            return ExplicitModel(params["x_points"], params["proj"], base,
                                 p=float(params.get("p", 2)), open=bool(params.get("open", True)),
                                 grid_spec=gs)
    except ModelFileError:
        raise
    except (ValueError, TypeError) as exc:
        raise ModelFileError(str(exc), "model") from exc
    raise ModelFileError(f"unknown model kind {kind!r}", "model.kind")


def section_from_entry(model, entry: dict, name: str = "") -> Section:
    path = f"sections.{name}"
    _keys(entry, {"kind", "payload"}, path, required={"kind", "payload"})
    kind, payload = entry["kind"], entry["payload"]
    try:
        if kind == "expr":
            if model.kind not in ("linear-projection", "heisenberg"):
                raise ModelFileError(f"expr sections need heights; {model.kind} uses "
                                     "signs/offsets/table", path)
            srcs = payload if isinstance(payload, list) else [payload]
            cols = [compile_expression(s)(model.base) for s in srcs]
            params = np.column_stack(cols) if model.kind == "linear-projection" else cols[0]
            if model.kind == "linear-projection" and params.shape[1] != model.k:
                raise ModelFileError(f"need {model.k} height expression(s)", path)
            return Section(model, params, label=name)
        expected = {"abs-value": "signs", "circle": "offsets"}.get(model.kind, "table")
        if kind not in (expected, "table"):
            raise ModelFileError(f"{model.kind} sections use kind {expected!r}", path)
        arr = np.asarray(payload)
        if arr.shape[0] != model.m:
            raise ModelFileError(f"payload has {arr.shape[0]} entries, base has {model.m}", path)
        return Section(model, arr, label=name)
    except ModelFileError:
        raise
    except (ExprSyntaxError, ExprEvalError, SectionError, ValueError, TypeError) as exc:
        raise ModelFileError(str(exc), path) from exc


def weight_from_entry(model, entry, name: str = "") -> WeightFunction:
    path = f"weights.{name}"
    try:
        if isinstance(entry, str):
            vals = compile_expression(entry)(model.base)
        elif isinstance(entry, (int, float)):
            vals = np.full(model.m, float(entry))
        else:
            vals = np.asarray(entry, float)
            if vals.shape != (model.m,):
                raise ModelFileError(f"table has {vals.size} entries, base has {model.m}", path)
        return WeightFunction(model, vals, label=name)
    except ModelFileError:
        raise
    except (ExprSyntaxError, ExprEvalError, SectionError, ValueError, TypeError) as exc:
        raise ModelFileError(str(exc), path) from exc


def section_entry(section: Section) -> dict:
    kind = {"abs-value": "signs", "circle": "offsets"}.get(section.model.kind, "table")
    return {"kind": kind, "payload": section.params.tolist()}


def weight_entry(f: WeightFunction) -> list:
    return f.values.tolist()


def validate_check(check: dict, doc: dict, index: int):
    path = f"checks[{index}]"
    _keys(check, {"prop", "args"}, path, required={"prop"})
    prop = check["prop"]
    if prop not in CHECK_ARGS:
        raise ModelFileError(f"unknown proposition {prop!r}", path + ".prop")
    args = check.get("args", {})
    req, opt = CHECK_ARGS[prop]
    _keys(args, req | opt | _COMMON_OPT, path + ".args", required=req)
    sections = doc.get("sections", {})
    for key in SECTION_ARGS & set(args):
        if args[key] not in sections:
            raise ModelFileError(f"section {args[key]!r} is not defined", f"{path}.args.{key}")
    for name in args.get("family", []) or []:
        if name not in sections:
            raise ModelFileError(f"section {name!r} is not defined", f"{path}.args.family")
    if "f" in args and args["f"] not in doc.get("weights", {}):
        raise ModelFileError(f"weight {args['f']!r} is not defined", f"{path}.args.f")
    if prop == "affine" and abs(float(args["alpha"]) + float(args["beta"]) - 1.0) > 1e-12:
        raise ModelFileError("alpha + beta must equal 1", f"{path}.args")
    if prop in ("ils-set-convex", "strong-leibniz") and not 0 <= float(args["t"]) <= 1:
        raise ModelFileError("t must lie in [0, 1]", f"{path}.args.t")
    if "variant" in args and args["variant"] not in ("moving-to-base-fiber", "base-to-moving-fiber"):
        raise ModelFileError(f"unknown variant {args['variant']!r}", f"{path}.args.variant")


def load_document(doc: dict) -> Workspace:
    _keys(doc, {"model", "sections", "weights", "checks"}, "", required={"model"})
    model = model_from_spec(doc["model"])
    secs = doc.get("sections", {})
    if not isinstance(secs, dict):
        raise ModelFileError("expected an object", "sections")
    sections = {name: section_from_entry(model, e, name) for name, e in secs.items()}
    wts = doc.get("weights", {})
    if not isinstance(wts, dict):
        raise ModelFileError("expected an object", "weights")
    weights = {name: weight_from_entry(model, e, name) for name, e in wts.items()}
    checks = doc.get("checks", [])
    if not isinstance(checks, list):
        raise ModelFileError("expected a list", "checks")
    for i, c in enumerate(checks):
        validate_check(c, doc, i)
    return Workspace(model, sections, weights, checks, doc)


def load_model_file(path) -> Workspace:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(exc.msg, str(path), exc.lineno, exc.colno) from exc
    return load_document(doc)


def dump_document(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"
