"""``ils``: model-file validation, constants, slopes, verification and hunting.

Exit codes: 0 pass, 1 violation found, 2 input error, 3 every check had
unmet hypotheses.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .constants import (
    BASE_TO_MOVING,
    DEFAULT_TOL,
    MOVING_TO_BASE,
    ScaleSchedule,
    Tolerance,
    global_constant_detail,
    richardson,
    slope_at,
)
from .hunt import GENERATORS, HuntError, hunt, run_trials
from .metric import MetricSpace, validate_metric
from .modelfile import PROPS, ModelFileError, load_document, load_model_file
from .quotient import RatioUndefined, UnknownBasePoint
from .report import build_report, dumps, fmt, render_table, validate_report
from .sections import PreconditionError, SectionError, validate_section
from .verify import FAIL, PASS, UNMET, FamilyError, run_check

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_UNMET = 0, 1, 2, 3

_INPUT_ERRORS = (ModelFileError, SectionError, PreconditionError, UnknownBasePoint,
                 RatioUndefined, FamilyError, HuntError, ValueError, OSError)


class InputError(Exception):
    pass


def _err(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_INPUT


def _load(path):
    try:
        return load_model_file(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}")


def _section(ws, name):
    if name not in ws.sections:
        known = ", ".join(sorted(ws.sections)) or "none"
        raise InputError(f"unknown section {name!r} (defined: {known})")
    return ws.sections[name]


def _write(path, doc):
    validate_report(doc)
    if path:
        Path(path).write_text(dumps(doc), encoding="utf-8")


def _parse_point(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"cannot parse point {text!r}")
    return vals


def _tol(args):
    if args.tol is None:
        return None
    if not args.tol >= 0:
        raise InputError("--tol must be nonnegative")
    return Tolerance(rel=args.tol)


AXIOM_SAMPLE = 400


def _thin(n):
    if n <= AXIOM_SAMPLE:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, AXIOM_SAMPLE).round().astype(int))


# --- validate --------------------------------------------------------------------------------


def cmd_validate(args) -> int:
    ws = _load(args.file)
    model = ws.model
    problems = []
    # the triangle check is cubic: large samples are thinned to an even subsample
    base = model.base[_thin(model.m)]
    rep = validate_metric(MetricSpace.from_points(base, model.base_dist, tol=args.axiom_tol),
                          args.axiom_tol)
    problems += [f"base metric: {v}" for v in rep.violations]
    values = [s.values for s in ws.sections.values()]
    if values:
        pts = np.unique(np.concatenate(values), axis=0)
        pts = pts[_thin(len(pts))]
        rep = validate_metric(model.x_space(pts, args.axiom_tol), args.axiom_tol)
        problems += [f"total-space metric: {v}" for v in rep.violations]
    for name, s in ws.sections.items():
        if not validate_section(model, s.values):
            problems.append(f"sections.{name}: not a section (pi(phi(y)) != y)")
    if problems:
        for p in problems[:50]:
            print(p, file=sys.stderr)
        return EXIT_INPUT
    print(f"ok: {model.kind} model, {model.m} base points, {len(ws.sections)} section(s), "
          f"{len(ws.weights)} weight(s), {len(ws.checks)} check(s)")
    return EXIT_PASS


# --- constant ----------------------------------------------------------------------------------


def cmd_constant(args) -> int:
    ws = _load(args.file)
    phi = _section(ws, args.section)
    tol = _tol(args) or DEFAULT_TOL
    det = global_constant_detail(phi, tol.denom_floor)
    pair = [ws.model.base[i].tolist() for i in det.witness] if det.witness else None
    if not args.quiet:
        print(f"ILS({args.section}) = {fmt(det.value)}")
        if pair:
            print(f"extremal pair: y1 = {pair[0]}, y2 = {pair[1]}")
        print(f"skipped pairs (fiber distance < {fmt(tol.denom_floor)}): {det.skipped}")
    doc = build_report("constant", model=ws.model.spec(),
                       constants=[{"section": args.section, "value": det.value,
                                   "skipped": det.skipped, "extremal_pair": pair}],
                       skip_counters={"denominator_pairs": det.skipped})
    _write(args.out, doc)
    return EXIT_PASS


# --- slope -------------------------------------------------------------------------------------


def _schedule(text, min_samples):
    try:
        r0, k = text.split(",")
        return ScaleSchedule.geometric(float(r0), int(k), min_samples)
    except ValueError as exc:
        raise InputError(f"--scales expects 'r0,halvings', got {text!r} ({exc})")


def cmd_slope(args) -> int:
    ws = _load(args.file)
    _section(ws, args.section)
    sched = _schedule(args.scales, args.min_samples)
    at = _parse_point(args.at)
    if args.refine:
        doc = json.loads(json.dumps(ws.document))
        grid = doc["model"]["grid"]
        if "axes" not in grid:
            raise InputError("--refine needs an 'axes' grid")
        grid["refine"] = {"at": at, "radius": sched.radii[0], "factor": args.refine}
        ws = load_document(doc)
    phi = ws.sections[args.section]
    try:
        z = ws.model.index_of(at)
    except UnknownBasePoint as exc:
        raise InputError(f"--at {args.at}: {exc.args[0]}")
    tol = _tol(args) or DEFAULT_TOL
    est = slope_at(phi, z, sched, args.variant, tol.denom_floor)
    extra = richardson(est) if args.richardson else None
    if not args.quiet:
        rows = [(e.radius, e.sup, e.count, "yes" if e.reliable else "no") for e in est.per_scale]
        print(render_table(["radius", "sup", "samples", "reliable"], rows))
        print(f"slope({args.section}) at {at} = {fmt(est.value)}"
              + (" (isolated point)" if est.isolated else "")
              + f"  [{args.variant}]")
        if extra is not None:
            print(f"extrapolated = {fmt(extra)}")
    table = {"section": args.section, "at": [float(v) for v in at], "variant": args.variant,
             "value": est.value, "isolated": est.isolated, "scales": est.table()}
    if extra is not None:
        table["extrapolated"] = extra
    doc = build_report("slope", model=ws.model.spec(), slope_tables=[table],
                       skip_counters={"denominator_pairs": est.skipped})
    _write(args.out, doc)
    return EXIT_PASS


# --- verify / hunt -------------------------------------------------------------------------------


def _print_reports(reports, trials=None):
    rows = []
    for k, r in enumerate(reports):
        label = r.prop_id if trials is None else f"{r.prop_id}#{trials[k]}"
        rows.append((label, r.lhs, r.rhs, r.margin, r.verdict))
    print(render_table(["check", "lhs", "rhs", "margin", "verdict"], rows))


def _exit_for(reports) -> int:
    verdicts = [r.verdict for r in reports]
    if FAIL in verdicts:
        return EXIT_FAIL
    if verdicts and all(v == UNMET for v in verdicts):
        return EXIT_UNMET
    return EXIT_PASS


def _witness_dir(path):
    if not path:
        return None
    d = Path(path)
    try:
        d.mkdir(parents=True, exist_ok=True)
        probe = d / ".ils-write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise InputError(f"cannot write to {d}: {exc.strerror or exc}")
    return d


def _write_witnesses(d, reports, names):
    for r, name in zip(reports, names):
        if r.verdict == FAIL:
            (d / name).write_text(json.dumps(r.witness, indent=2) + "\n", encoding="utf-8")


def cmd_verify(args) -> int:
    if args.prop is not None and args.prop not in PROPS:
        raise InputError(f"unknown proposition {args.prop!r}; expected one of {', '.join(PROPS)}")
    if args.trials is not None and args.trials < 1:
        raise InputError("--trials must be >= 1")
    wdir = _witness_dir(args.witness_dir)
    tol = _tol(args)
    ws = _load(args.file) if args.file else None
    trials_idx = None
    skips = {}
    if args.trials:
        if args.prop is None:
            raise InputError("--trials needs --prop")
        results = run_trials(args.prop, args.generator, args.trials, args.seed,
                             model=ws.model if ws else None, shrink=False)
        reports = [r.report for r in results if r.report is not None]
        trials_idx = [r.trial for r in results if r.report is not None]
        skips["skipped_trials"] = sum(1 for r in results if r.report is None)
    else:
        if ws is None:
            raise InputError("give a model file or --trials")
        checks = [c for c in ws.checks if args.prop is None or c["prop"] == args.prop]
        if not checks:
            raise InputError(f"no checks{' for ' + args.prop if args.prop else ''} in {args.file}")
        reports = [run_check(ws, c, tol) for c in checks]
    skips["hypotheses_unmet"] = sum(r.verdict == UNMET for r in reports)
    counts = {v: sum(r.verdict == v for r in reports) for v in (PASS, FAIL, UNMET)}
    if not args.quiet:
        _print_reports(reports, trials_idx)
    print(f"checks={len(reports)} pass={counts[PASS]} fail={counts[FAIL]} "
          f"hypotheses-unmet={counts[UNMET]}")
    if wdir is not None:
        names = [f"witness_{(trials_idx or range(len(reports)))[k]:04d}.json"
                 for k in range(len(reports))]
        _write_witnesses(wdir, reports, names)
    doc = build_report("verify", reports, seed=args.seed if args.trials else None,
                       model=ws.model.spec() if ws else None, skip_counters=skips,
                       summary={"checks": len(reports), **counts}, trials=trials_idx)
    _write(args.out, doc)
    return _exit_for(reports)


def cmd_hunt(args) -> int:
    if args.trials < 1:
        raise InputError("--trials must be >= 1")
    if args.prop not in PROPS:
        raise InputError(f"unknown proposition {args.prop!r}; expected one of {', '.join(PROPS)}")
    out = _witness_dir(args.out)
    res = hunt(args.generator, args.prop, args.trials, args.seed)
    reports = res.reports
    trials = [f.trial for f in res.failures]
    if not args.quiet and reports:
        _print_reports(reports, trials)
    _write_witnesses(out, reports, [f"witness_{t:04d}.json" for t in trials])
    doc = build_report("hunt", reports, seed=args.seed, trials=trials,
                       skip_counters={"hypotheses_unmet": res.unmet,
                                      "skipped_trials": res.skipped},
                       summary={"prop": args.prop, "generator": args.generator,
                                "trials": args.trials, "failures": len(reports),
                                "passed": res.passed})
    _write(out / "report.json", doc)
    print(res.summary())
    return EXIT_FAIL if reports else EXIT_PASS


# --- entry point ----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ils", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a model file and check metric axioms and sections")
    p.add_argument("file")
    p.add_argument("--axiom-tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_validate)

    def common(p):
        p.add_argument("--out", help="write a JSON ReportFile here")
        p.add_argument("--quiet", action="store_true", help="suppress the human table")
        p.add_argument("--tol", type=float, help="relative tolerance (default 1e-9)")

    p = sub.add_parser("constant", help="global intrinsic Lipschitz constant of a section")
    p.add_argument("file")
    p.add_argument("--section", required=True)
    common(p)
    p.set_defaults(func=cmd_constant)

    p = sub.add_parser("slope", help="per-scale slope table at a base point")
    p.add_argument("file")
    p.add_argument("--section", required=True)
    p.add_argument("--at", required=True, help="base point, comma separated coordinates")
    p.add_argument("--scales", default="0.1,7", help="'r0,halvings' (default 0.1,7)")
    p.add_argument("--variant", choices=[MOVING_TO_BASE, BASE_TO_MOVING], default=MOVING_TO_BASE)
    p.add_argument("--min-samples", type=int, default=1)
    p.add_argument("--refine", type=int, metavar="FACTOR",
                   help="add a FACTOR-times finer grid inside B(at, r0)")
    p.add_argument("--richardson", action="store_true",
                   help="also report a Richardson extrapolation of the last two scales")
    common(p)
    p.set_defaults(func=cmd_slope)

    p = sub.add_parser("verify", help="run a model file's checks, or seeded random trials")
    p.add_argument("file", nargs="?")
    p.add_argument("--prop")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--generator", choices=GENERATORS, default="mixed")
    p.add_argument("--witness-dir", help="write a model file for every failing check")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("hunt", help="seeded counterexample search with shrinking")
    p.add_argument("--prop", required=True)
    p.add_argument("--generator", choices=GENERATORS, default="mixed")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="directory for witnesses and report.json")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_hunt)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except InputError as exc:
        return _err(str(exc))
    except _INPUT_ERRORS as exc:
        return _err(str(exc))


if __name__ == "__main__":
    sys.exit(main())
