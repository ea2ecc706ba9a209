"""Seeded randomized counterexample search with witness shrinking.

A trial is a complete model-file document (model, sections, weights and a
single check) drawn from ``make_rng(seed, trial)``; it is run through the
same loader as user files, so a failing trial *is* its own witness.
Failures are shrunk by repeatedly halving the base extent around the check
point and halving section amplitudes while the failure persists.

Trials run on a thread pool capped by ``ILS_THREADS`` (0 or unset: one
per CPU).  Results are collected by trial index, so the output does not
depend on scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .models import GridSpec, make_rng, random_explicit_model, random_params, _fourier_field
from .modelfile import PROPS, ModelFileError, load_document, section_entry
from .quotient import (
    AbsValueModel,
    CircleModel,
    HeisenbergModel,
    LinearProjectionModel,
    RatioUndefined,
)
from .sections import PreconditionError, Section, SectionError, sup_norm
from .verify import FAIL, PASS, UNMET, FamilyError, run_document

GENERATORS = ("linear", "abs", "circle", "heisenberg", "explicit", "mixed")

# which model families each proposition can be exercised on
SUPPORTED = {
    "chain": ("linear", "abs", "circle", "heisenberg", "explicit"),
    "leibniz": ("linear", "circle", "explicit"),
    "affine": ("linear", "circle", "explicit"),
    "convex-membership": ("linear",),
    "ils-set-convex": ("linear",),
    "product": ("abs", "circle", "explicit"),
    "square": ("abs", "circle", "explicit"),
    "inverse": ("abs", "circle", "explicit"),
    "maxmin": ("abs", "circle", "explicit"),
    "strong-leibniz": ("linear", "circle", "explicit"),
    "strong-product": ("abs", "circle", "explicit"),
    "equivalence-families": ("linear",),
    "vector-closure": ("linear",),
}

_FAMILY = {
    "linear-projection": "linear",
    "abs-value": "abs",
    "circle": "circle",
    "heisenberg": "heisenberg",
    "explicit": "explicit",
}


class HuntError(ValueError):
    pass


class TrialSkipped(Exception):
    """The drawn instance cannot host the check (e.g. no positive section for 1/phi)."""


@dataclass
class TrialResult:
    trial: int
    verdict: str
    report: object = None
    document: dict | None = None
    note: str = ""


@dataclass
class HuntResult:
    prop: str
    generator: str
    trials: int
    seed: int
    failures: list = field(default_factory=list)
    passed: int = 0
    unmet: int = 0
    skipped: int = 0

    @property
    def reports(self) -> list:
        return [f.report for f in self.failures]

    def summary(self) -> str:
        return (f"trials={self.trials} failures={len(self.failures)} passed={self.passed} "
                f"hypotheses-unmet={self.unmet} skipped={self.skipped}")


def thread_count() -> int:
    raw = os.environ.get("ILS_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise HuntError(f"ILS_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise HuntError("ILS_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


# --- model generators ------------------------------------------------------------------


def _axis(lo, span, n):
    step = round(span / (n - 1), 6)
    return (lo, round(lo + step * (n - 1), 6), step)


def generate_model(family: str, rng: np.random.Generator, prop: str = "chain"):
    if family == "linear":
        if prop == "vector-closure":
            # the scaled reference lambda psi needs the common point at the origin
            return LinearProjectionModel(2, 1, 2.0, GridSpec(((-0.5, 0.5, 0.01),)).points(),
                                         GridSpec(((-0.5, 0.5, 0.01),)))
        p = float(rng.choice([1.0, 2.0, np.inf]))
        if prop in ("chain", "equivalence-families") and rng.random() < 0.3:
            gs = GridSpec((_axis(0.0, 1.0, 11), _axis(0.0, 1.0, 11)))
            return LinearProjectionModel(3, 1, p, gs.points(), gs)
        k = int(rng.integers(1, 3))
        gs = GridSpec((_axis(round(float(rng.uniform(-1, 1)), 3), 1.0,
                             int(rng.integers(41, 102))),))
        return LinearProjectionModel(1 + k, k, p, gs.points(), gs)
    if family == "abs":
        eps = round(float(rng.uniform(0.2, 1.0)), 3)
        step = round(float(rng.uniform(0.01, 0.04)), 3)
        n = int(rng.integers(30, 101))
        R = round(eps + step * (n - 1), 6)
        gs = GridSpec(((eps, R, step),))
        return AbsValueModel(eps, R, gs.points(), gs)
    if family == "circle":
        n = int(rng.integers(20, 61))
        gs = GridSpec(((0.0, round((n - 1) / n, 9), round(1.0 / n, 9)),))
        return CircleModel(gs.points(), gs)
    if family == "heisenberg":
        gs = GridSpec(((-0.3, 0.3, 0.1), (-0.3, 0.3, 0.1)))
        return HeisenbergModel(gs.points(), gs)
    if family == "explicit":
        return random_explicit_model(rng, n_base=int(rng.integers(3, 7)))
    raise HuntError(f"unknown generator {family!r}; expected one of {GENERATORS}")


def family_for(generator: str, prop: str, trial: int) -> str:
    if generator == "mixed":
        fams = SUPPORTED[prop]
        return fams[trial % len(fams)]
    return generator


# --- trial builders --------------------------------------------------------------------------


def _section(model, rng, roughness=None):
    if roughness is None:
        roughness = float(rng.uniform(0.2, 3.0))
    return Section(model, random_params(model, roughness, rng))


def _agreeing(model, rng, ref: Section, i: int):
    """A random section with the same value as ``ref`` at base index ``i``."""
    s = _section(model, rng)
    params = np.array(s.params)
    params[i] = ref.params[i]
    return Section(model, params)


def _weight(model, rng):
    if rng.random() < 0.25:
        return np.full(model.m, float(rng.choice([0.0, 0.25, 0.5, 1.0])))
    field_ = _fourier_field(rng, model.base, float(rng.uniform(0.5, 3.0)))
    return 0.5 + 0.5 * np.tanh(field_)


def _doc(model, sections, check, weights=None):
    doc = {"model": model.spec(),
           "sections": {n: section_entry(s) for n, s in sections.items()}}
    if weights:
        doc["weights"] = {n: np.asarray(w, float).tolist() for n, w in weights.items()}
    doc["checks"] = [check]
    return doc


def _positive(model, rng):
    """A section with strictly positive values, when the model has one."""
    if model.kind == "abs-value":
        return Section.canonical(model)
    if model.kind == "circle":
        return Section(model, rng.integers(1, 4, size=model.m))
    choices = []
    for fib in model.fibers:
        pos = [j for j in fib if model.x_points[j, 0] > 0]
        if not pos:
            raise TrialSkipped("a fiber has no positive point")
        choices.append(pos[int(rng.integers(len(pos)))])
    return Section(model, choices)


def build_trial(prop: str, model, rng: np.random.Generator) -> dict:
    """One random instance of ``prop`` on ``model`` as a model-file document."""
    fam = _FAMILY[model.kind]
    if fam not in SUPPORTED[prop]:
        raise HuntError(f"{prop} trials are not available on {model.kind} models")
    m = model.m
    i = int(rng.integers(m))
    at = model.base[i].tolist()
    if prop == "chain":
        return _doc(model, {"phi": _section(model, rng)}, {"prop": prop, "args": {"phi": "phi",
                                                                                "at": at}})
    if prop in ("leibniz", "convex-membership"):
        phi = _section(model, rng)
        psi = _agreeing(model, rng, phi, i)
        return _doc(model, {"phi": phi, "psi": psi},
                    {"prop": prop, "args": {"phi": "phi", "psi": "psi", "f": "f", "at": at}},
                    {"f": _weight(model, rng)})
    if prop == "affine":
        phi = _section(model, rng)
        psi = _agreeing(model, rng, phi, i)
        alpha = round(float(rng.uniform(-1.0, 2.0)), 3)
        return _doc(model, {"phi": phi, "psi": psi},
                    {"prop": prop, "args": {"phi": "phi", "psi": "psi", "alpha": alpha,
                                            "beta": 1.0 - alpha, "at": at}})
    if prop == "ils-set-convex":
        psi = _section(model, rng)
        phi1 = _agreeing(model, rng, psi, i)
        phi2 = _agreeing(model, rng, psi, i)
        t = float(rng.choice([0.0, 0.25, 0.5, 0.75, 1.0]))
        return _doc(model, {"psi": psi, "phi1": phi1, "phi2": phi2},
                    {"prop": prop, "args": {"psi": "psi", "phi1": "phi1", "phi2": "phi2",
                                            "at": at, "t": t}})
    if prop == "product":
        phi = _section(model, rng)
        psi = _agreeing(model, rng, phi, i)
        return _doc(model, {"phi": phi, "psi": psi},
                    {"prop": prop, "args": {"phi": "phi", "psi": "psi", "at": at}})
    if prop == "square":
        return _doc(model, {"phi": _section(model, rng)},
                    {"prop": prop, "args": {"phi": "phi", "at": at}})
    if prop == "inverse":
        phi = _positive(model, rng)
        eps = float(phi.scalar().min()) * float(rng.choice([0.5, 1.0]))
        return _doc(model, {"phi": phi}, {"prop": prop, "args": {"phi": "phi", "eps": eps}})
    if prop == "maxmin":
        return _doc(model, {"phi": _section(model, rng), "psi": _section(model, rng)},
                    {"prop": prop, "args": {"phi": "phi", "psi": "psi"}})
    if prop == "strong-leibniz":
        phi = _section(model, rng)
        psi = phi if rng.random() < 0.5 else _section(model, rng)
        t = round(float(rng.uniform(0, 1)), 3)
        return _doc(model, {"phi": phi, "psi": psi},
                    {"prop": prop, "args": {"phi": "phi", "psi": "psi", "t": t}})
    if prop == "strong-product":
        phi = _section(model, rng)
        M = sup_norm(phi) * (1.0 + round(float(rng.uniform(0, 0.5)), 3))
        c = float(rng.choice([1.0, 0.5, 0.25]))
        return _doc(model, {"phi": phi},
                    {"prop": prop, "args": {"phi": "phi", "M": M, "c": c,
                                            "local": bool(rng.random() < 0.5)}})
    if prop == "equivalence-families":
        return _doc(model, {"phi": _section(model, rng)}, {"prop": prop, "args": {"phi": "phi"}})
    if prop == "vector-closure":
        i = model.index_of(np.zeros(model.base_dim))
        psi = _section(model, rng)
        lams = [round(float(rng.uniform(0.1, 2.0)), 3), round(float(rng.uniform(0.1, 2.0)), 3)]
        if rng.random() < 0.2:
            lams[1] = 0.0
        secs = {"psi": psi}
        for j, lam in enumerate(lams, 1):
            g = random_params(model, float(rng.uniform(0.1, 2.0)), rng)
            params = lam * psi.params + g - g[i]
            if lam == 0.0:
                params = np.zeros_like(params)
            secs[f"phi{j}"] = Section(model, params)
        return _doc(model, secs,
                    {"prop": prop, "args": {"psi": "psi", "phi1": "phi1", "phi2": "phi2",
                                            "at": model.base[i].tolist(),
                                            "lambda1": lams[0], "lambda2": lams[1]}})
    raise HuntError(f"unknown proposition {prop!r}")


# --- running and shrinking -------------------------------------------------------------------

_EXPECTED = (PreconditionError, SectionError, RatioUndefined, FamilyError, TrialSkipped)


def run_trial_document(doc: dict):
    """Run the single check of ``doc``; returns the report or raises an expected error."""
    return run_document(doc)[0]


def _fails(doc) -> bool:
    try:
        return run_trial_document(doc).verdict == FAIL
    except (_EXPECTED + (ModelFileError, ValueError)):
        return False


def _restrict(doc: dict, keep) -> dict:
    ws = load_document(doc)
    model = ws.model
    keep = np.asarray(sorted(keep), int)
    if model.kind == "explicit":
        new = model.with_base(model.base[keep], keep=keep)
        xs = np.flatnonzero(np.isin(model.proj, keep))
        remap = {int(old): k for k, old in enumerate(xs)}

        def params_of(s):
            return np.array([remap[int(p)] for p in s.params[keep]])
    else:
        new = model.with_base(model.base[keep])

        def params_of(s):
            return s.params[keep]

    out = {"model": new.spec(),
           "sections": {n: section_entry(Section(new, params_of(s))) for n, s in
                        ws.sections.items()}}
    if ws.weights:
        out["weights"] = {n: w.values[keep].tolist() for n, w in ws.weights.items()}
    out["checks"] = [dict(c) for c in doc["checks"]]
    return out


def _center(ws, check):
    at = check.get("args", {}).get("at")
    if at is not None:
        return ws.model.index_of(at)
    b = ws.model.base
    mid = (b.min(axis=0) + b.max(axis=0)) / 2
    return int(np.argmin(ws.model.base_dist(b, mid[None, :])))


def _halve_extent(doc):
    ws = load_document(doc)
    model = ws.model
    c = _center(ws, doc["checks"][0])
    d = np.asarray(model.base_dist(model.base, model.base[c][None, :]), float)
    keep = np.flatnonzero(d <= d.max() / 2)
    if len(keep) < 2 or len(keep) == model.m:
        return None
    return _restrict(doc, keep)


def _halve_amplitude(doc):
    ws = load_document(doc)
    model = ws.model
    if model.kind in ("linear-projection", "heisenberg"):
        def shrink(p):
            return np.asarray(p, float) * 0.5
    elif model.kind == "circle":
        def shrink(p):
            return np.trunc(np.asarray(p) / 2).astype(int)
    else:
        return None
    secs = {n: Section(model, shrink(s.params)) for n, s in ws.sections.items()}
    if all(np.array_equal(secs[n].params, s.params) for n, s in ws.sections.items()):
        return None
    out = dict(doc)
    out["sections"] = {n: section_entry(s) for n, s in secs.items()}
    return out


def shrink_document(doc: dict, max_steps: int = 40) -> dict:
    """Greedy shrink: keep any halving (extent first, then amplitude) that still fails."""
    current = doc
    for _ in range(max_steps):
        for step in (_halve_extent, _halve_amplitude):
            try:
                cand = step(current)
            except (_EXPECTED + (ModelFileError, ValueError)):
                cand = None
            if cand is not None and _fails(cand):
                current = cand
                break
        else:
            break
    return current


def _one_trial(prop, generator, seed, trial, model=None, shrink=True) -> TrialResult:
    rng = make_rng(seed, trial)
    try:
        mdl = model if model is not None else generate_model(
            family_for(generator, prop, trial), rng, prop)
        doc = build_trial(prop, mdl, rng)
        report = run_trial_document(doc)
    except _EXPECTED as exc:
        return TrialResult(trial, "skipped", note=f"{type(exc).__name__}: {exc}")
    if report.verdict == FAIL and shrink:
        doc = shrink_document(doc)
        report = run_trial_document(doc)
    return TrialResult(trial, report.verdict, report, doc)


def run_trials(prop: str, generator: str, trials: int, seed: int, model=None,
               shrink: bool = True) -> list:
    """All trial results in trial order (``model`` pins every trial to one model)."""
    if prop not in PROPS:
        raise HuntError(f"unknown proposition {prop!r}; expected one of {PROPS}")
    if model is None and generator not in GENERATORS:
        raise HuntError(f"unknown generator {generator!r}; expected one of {GENERATORS}")
    if model is None and generator != "mixed" and generator not in SUPPORTED[prop]:
        raise HuntError(f"{prop} trials are not available on the {generator} generator")
    if trials < 1:
        raise HuntError("trials must be >= 1")
    workers = min(thread_count(), trials)

    def job(t):
        return _one_trial(prop, generator, seed, t, model, shrink)

    if workers <= 1:
        results = [job(t) for t in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(trials)))
    return sorted(results, key=lambda r: r.trial)


def hunt(generator: str, prop: str, trials: int, seed: int) -> HuntResult:
    """Seeded search for violations of ``prop``; failures are shrunk and sorted by trial."""
    results = run_trials(prop, generator, trials, seed)
    out = HuntResult(prop, generator, trials, seed)
    for r in results:
        if r.verdict == FAIL:
            out.failures.append(r)
        elif r.verdict == PASS:
            out.passed += 1
        elif r.verdict == UNMET:
            out.unmet += 1
        else:
            out.skipped += 1
    return out
