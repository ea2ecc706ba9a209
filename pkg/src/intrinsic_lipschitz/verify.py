"""Numerical checks of the slope calculus, one function per statement.

Each checker returns an :class:`InequalityReport`.  The verdict is

``pass``
    every hypothesis holds and ``lhs <= rhs (1 + rel) + abs``;
``fail``
    every hypothesis holds and the inequality does not;
``hypotheses-unmet``
    some hypothesis is false on the sample, so nothing is claimed.

Every report carries a ``witness``: a self-contained model-file document
with the check's inputs, so any verdict can be replayed with
:func:`run_document`.

Slope-based checks compare both sides at every nonempty scale of the
schedule, not only at the smallest one.  Each uses the denominator its
proof divides by and lists the other denominator under ``info``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import (
    BASE_TO_MOVING,
    DEFAULT_TOL,
    MOVING_TO_BASE,
    ScaleSchedule,
    Tolerance,
    asymptotic_slope_at,
    global_constant,
    global_constant_detail,
    local_ratios,
    min_constant_wrt,
    slope_at,
)
from .modelfile import (
    PROPS,
    SECTION_ARGS,
    Workspace,
    load_document,
    section_entry,
    weight_entry,
)
from .quotient import RatioUndefined, fiber_ratio_bound
from .sections import (
    GeneralizedMap,
    PreconditionError,
    Section,
    SectionError,
    WeightFunction,
    affine_combine,
    convex_combine,
    pointwise_inverse,
    pointwise_max,
    pointwise_min,
    pointwise_product,
    pointwise_square,
    sup_norm,
)

PASS, FAIL, UNMET = "pass", "fail", "hypotheses-unmet"
AGREE_TOL = 1e-9


@dataclass
class Hypothesis:
    name: str
    satisfied: bool
    detail: str = ""


@dataclass
class InequalityReport:
    prop_id: str
    hypotheses: list
    lhs: float
    rhs: float
    verdict: str
    witness: dict | None = None
    scale_table: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def hypotheses_met(self) -> bool:
        return all(h.satisfied for h in self.hypotheses)

    def to_dict(self) -> dict:
        return {
            "prop_id": self.prop_id,
            "hypotheses": [
                {"name": h.name, "satisfied": h.satisfied, "detail": h.detail}
                for h in self.hypotheses
            ],
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "verdict": self.verdict,
            "witness": self.witness,
            "scale_table": self.scale_table,
            "info": self.info,
        }


def _verdict(hyps, holds: bool) -> str:
    if not all(h.satisfied for h in hyps):
        return UNMET
    return PASS if holds else FAIL


def _tol_entry(tol: Tolerance) -> dict:
    return {"rel": tol.rel, "abs": tol.abs, "denom_floor": tol.denom_floor}


def _witness(prop, model, sections=None, weights=None, args=None, sched=None, tol=DEFAULT_TOL):
    if any(not isinstance(s, Section) for s in (sections or {}).values()):
        return None  # a bare map (e.g. the zero map) has no model-file form
    args = dict(args or {})
    for name in (sections or {}):
        if name in SECTION_ARGS:
            args.setdefault(name, name)
    if sched is not None:
        args["sched"] = sched.to_dict()
    args["tol"] = _tol_entry(tol)
    secs = {n: section_entry(s) for n, s in (sections or {}).items()}
    wts = {n: weight_entry(w) for n, w in (weights or {}).items()}
    doc = {"model": model.spec(), "sections": secs}
    if wts:
        doc["weights"] = wts
    doc["checks"] = [{"prop": prop, "args": args}]
    return doc


def _agree(phi, psi, i) -> Hypothesis:
    gap = float(phi.model.dist(phi.values[i], psi.values[i]))
    return Hypothesis("agree-at-point", gap <= AGREE_TOL, f"d(phi(y), psi(y)) = {gap!r}")


def _is_section(phi, name="phi") -> Hypothesis:
    ok = isinstance(phi, Section) or phi.is_section
    return Hypothesis(f"{name}-is-section", bool(ok))


def _nonempty(*estimates):
    """Indices of scales where every estimate has at least one neighbour."""
    n = len(estimates[0].per_scale)
    return [k for k in range(n) if all(e.per_scale[k].count > 0 for e in estimates)]


def _at(model, i):
    return model.base[i].tolist()


def _sched(sched):
    return sched or ScaleSchedule.geometric()


# --- chain of constants ------------------------------------------------------


def check_chain(phi: Section, z, sched: ScaleSchedule | None = None,
                tol: Tolerance = DEFAULT_TOL) -> InequalityReport:
    """Local slope <= asymptotic slope <= global constant, at matched scales; slope >= 1."""
    sched = _sched(sched)
    model = phi.model
    z = model.resolve(z)
    s = slope_at(phi, z, sched, MOVING_TO_BASE, tol.denom_floor)
    a = asymptotic_slope_at(phi, z, sched, MOVING_TO_BASE, tol.denom_floor)
    g = global_constant(phi, tol.denom_floor)
    hyps = [_is_section(phi)]
    table, worst = [], None
    ok = True

    def consider(lhs, rhs, what):
        nonlocal worst, ok
        holds = tol.leq(lhs, rhs)
        ok &= holds
        if worst is None or (rhs - lhs) < worst[1] - worst[0]:
            worst = (lhs, rhs, what)

    for es, ea in zip(s.per_scale, a.per_scale):
        table.append({"radius": es.radius, "slope": es.sup, "asymptotic": ea.sup,
                      "global": g, "count": es.count, "reliable": es.reliable})
        if es.count:
            consider(es.sup, ea.sup, f"slope <= asymptotic at r={es.radius!r}")
            consider(ea.sup, g, f"asymptotic <= global at r={es.radius!r}")
    nondegenerate = not s.isolated and s.skipped < s.per_scale[0].count
    if nondegenerate:
        consider(1.0, s.value, "slope >= 1")
    if worst is None:
        worst = (s.value, g, "isolated point")
        consider(a.value, g, "asymptotic <= global")
    info = {"slope": s.value, "asymptotic": a.value, "global": g, "tightest": worst[2],
            "isolated": s.isolated, "scale_used": s.scale_used}
    wit = _witness("chain", model, {"phi": phi}, args={"at": _at(model, z)}, sched=sched, tol=tol)
    return InequalityReport("chain", hyps, worst[0], worst[1], _verdict(hyps, ok), wit, table, info)


# --- Leibniz family -------------------------------------------------------------


def _leibniz_core(prop, phi, psi, w_phi, w_psi, ybar, sched, tol, coeffs, extra_hyps,
                  witness):
    """Shared machinery for the Leibniz, affine and convex-membership checks.

    ``w_phi``/``w_psi`` are base-indexed coefficients of the combination;
    ``coeffs = (c_phi, c_psi)`` multiply the slopes on the right-hand side.
    """
    model = phi.model
    i = ybar
    hyps = [_agree(phi, psi, i), Hypothesis("normed-model", bool(model.normed))] + extra_hyps
    if not model.normed:
        return InequalityReport(prop, hyps, float("nan"), float("nan"), UNMET, witness)
    try:
        if prop == "affine":
            eta = affine_combine(float(w_phi[0]), float(w_psi[0]), phi, psi)
        else:
            eta = convex_combine(WeightFunction(model, w_phi), phi, psi)
    except SectionError as exc:
        hyps.append(Hypothesis("combination-defined", False, str(exc)))
        return InequalityReport(prop, hyps, float("nan"), float("nan"), UNMET, witness)

    variant = BASE_TO_MOVING
    s_eta = slope_at(eta, i, sched, variant, tol.denom_floor)
    s_phi = slope_at(phi, i, sched, variant, tol.denom_floor)
    s_psi = slope_at(psi, i, sched, variant, tol.denom_floor)
    # finite-scale remainder from the weight varying across the ball
    idx, dz, ra, va = local_ratios(phi, i, sched, variant, tol.denom_floor)
    _, _, rb, vb = local_ratios(psi, i, sched, variant, tol.denom_floor)
    osc = np.abs(np.asarray(w_phi)[idx] - w_phi[i])
    gap = np.where(va & vb, np.abs(ra - rb), 0.0)
    with np.errstate(invalid="ignore"):
        term = np.where(osc > 0, osc * gap, 0.0)
    c_phi, c_psi = coeffs
    ok = True
    table = []
    worst = None
    for k in _nonempty(s_eta):
        r = s_eta.per_scale[k].radius
        inside = dz <= r
        allowance = float(term[inside].max()) if inside.any() else 0.0
        lhs = s_eta.per_scale[k].sup
        rhs = c_phi * s_phi.per_scale[k].sup + c_psi * s_psi.per_scale[k].sup
        holds = tol.leq(lhs, rhs + allowance)
        ok &= holds
        table.append({"radius": r, "lhs": lhs, "rhs": rhs, "allowance": allowance,
                      "count": s_eta.per_scale[k].count,
                      "reliable": s_eta.per_scale[k].reliable, "holds": holds})
    used = s_eta.scale_used
    if table:
        row = next((t for t in table if t["radius"] == used), table[-1])
        lhs, rhs, allowance = row["lhs"], row["rhs"], row["allowance"]
    else:
        lhs, rhs, allowance = 0.0, 0.0, 0.0
    # the other denominator convention, for information only
    o = [slope_at(x, i, sched, MOVING_TO_BASE, tol.denom_floor).value for x in (eta, phi, psi)]
    info = {
        "variant": variant,
        "allowance": allowance,
        "eta_is_section": bool(isinstance(eta, Section) or eta.is_section),
        "slopes": {"eta": s_eta.value, "phi": s_phi.value, "psi": s_psi.value},
        "other_variant": {"variant": MOVING_TO_BASE, "lhs": o[0],
                          "rhs": c_phi * o[1] + c_psi * o[2]},
    }
    return InequalityReport(prop, hyps, lhs, rhs + allowance, _verdict(hyps, ok), witness, table,
                            info), eta


def check_leibniz(phi: Section, psi: Section, f: WeightFunction, ybar,
                  sched: ScaleSchedule | None = None,
                  tol: Tolerance = DEFAULT_TOL) -> InequalityReport:
    """``Ils(f phi + (1-f) psi)(ybar) <= f(ybar) Ils(phi)(ybar) + (1-f(ybar)) Ils(psi)(ybar)``.

    The right-hand side at a finite radius ``r`` also gets the remainder
    ``max_{B(ybar, r)} |f(y) - f(ybar)| |a(y) - b(y)|`` (``a``, ``b`` the
    difference quotients of ``phi`` and ``psi``), which vanishes as ``r -> 0``
    for continuous ``f`` and is exactly zero for constant ``f``.
    """
    sched = _sched(sched)
    model = phi.model
    i = model.resolve(ybar)
    wit = _witness("leibniz", model, {"phi": phi, "psi": psi}, {"f": f},
                   {"f": "f", "at": _at(model, i)}, sched, tol)
    f0 = float(f.values[i])
    out = _leibniz_core("leibniz", phi, psi, f.values, 1.0 - f.values, i, sched, tol,
                        (f0, 1.0 - f0), [], wit)
    report = out[0] if isinstance(out, tuple) else out
    report.info["f_at_point"] = f0
    return report


def check_affine(phi: Section, psi: Section, alpha: float, beta: float, ybar,
                 sched: ScaleSchedule | None = None,
                 tol: Tolerance = DEFAULT_TOL) -> InequalityReport:
    """``Ils(alpha phi + beta psi)(ybar) <= |alpha| Ils(phi)(ybar) + |beta| Ils(psi)(ybar)``."""
    if abs(alpha + beta - 1.0) > 1e-12:
        raise SectionError(f"alpha + beta must equal 1, got {alpha + beta!r}")
    sched = _sched(sched)
    model = phi.model
    i = model.resolve(ybar)
    wit = _witness("affine", model, {"phi": phi, "psi": psi}, None,
                   {"alpha": alpha, "beta": beta, "at": _at(model, i)}, sched, tol)
    m = model.m
    out = _leibniz_core("affine", phi, psi, np.full(m, float(alpha)), np.full(m, float(beta)), i,
                        sched, tol, (abs(alpha), abs(beta)), [], wit)
    return out[0] if isinstance(out, tuple) else out


def check_convex_membership(phi: Section, psi: Section, f: WeightFunction, ybar,
                            sched: ScaleSchedule | None = None,
                            tol: Tolerance = DEFAULT_TOL) -> InequalityReport:
    """A convex combination of two sections agreeing at ``ybar`` is a section with finite slope there."""
    sched = _sched(sched)
    model = phi.model
    i = model.resolve(ybar)
    wit = _witness("convex-membership", model, {"phi": phi, "psi": psi}, {"f": f},
                   {"f": "f", "at": _at(model, i)}, sched, tol)
    f0 = float(f.values[i])
    hyps = [Hypothesis("affine-fibers", bool(model.affine_fibers),
                       "combinations of fiber points stay in the fiber")]
    out = _leibniz_core("convex-membership", phi, psi, f.values, 1.0 - f.values, i, sched, tol,
                        (f0, 1.0 - f0), hyps, wit)
    if not isinstance(out, tuple):
        return out
    report, eta = out
    is_sec = report.info["eta_is_section"]
    finite = bool(np.isfinite(report.lhs))
    report.info["finite_slope"] = finite
    if report.verdict == PASS and not (is_sec and finite):
        report.verdict = FAIL
    return report


def check_ils_set_convex(psi0: Section, phi1: Section, phi2: Section, yhat, t: float,
                         tol: Tolerance = DEFAULT_TOL) -> InequalityReport:
    """``t phi1 + (1-t) phi2`` stays relatively Lipschitz to ``psi0`` at ``xhat = psi0(yhat)``.

    The combined constant is compared against ``t L1 + (1-t) L2``, the bound
    the triangle inequality gives.
    """
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    model = psi0.model
    i = model.resolve(yhat)
    wit = _witness("ils-set-convex", model, {"psi": psi0, "phi1": phi1, "phi2": phi2}, None,
                   {"at": _at(model, i), "t": t}, None, tol)
    hyps = [Hypothesis("affine-fibers", bool(model.affine_fibers)),
            _agree(phi1, psi0, i), _agree(phi2, psi0, i)]
    hyps[1].name, hyps[2].name = "phi1-agrees", "phi2-agrees"
    if not all(h.satisfied for h in hyps):
        return InequalityReport("ils-set-convex", hyps, float("nan"), float("nan"), UNMET, wit)
    L1 = min_constant_wrt(phi1, psi0, i, tol)
    L2 = min_constant_wrt(phi2, psi0, i, tol)
    hyps.append(Hypothesis("phi1-member", bool(np.isfinite(L1)), f"constant {L1!r}"))
    hyps.append(Hypothesis("phi2-member", bool(np.isfinite(L2)), f"constant {L2!r}"))
    if not all(h.satisfied for h in hyps):
        return InequalityReport("ils-set-convex", hyps, float("nan"), float("nan"), UNMET, wit)
    eta = convex_combine(WeightFunction.constant(model, t), phi1, phi2)
    is_sec = bool(isinstance(eta, Section) or eta.is_section)
    agrees = float(model.dist(eta.values[i], psi0.values[i])) <= AGREE_TOL
    L = min_constant_wrt(eta, psi0, i, tol) if agrees else float("inf")
    rhs = t * L1 + (1 - t) * L2
    holds = is_sec and agrees and bool(np.isfinite(L)) and tol.leq(L, rhs)
    info = {"L1": L1, "L2": L2, "combined": L, "is_section": is_sec, "agrees": agrees, "t": t}
    return InequalityReport("ils-set-convex", hyps, L, rhs, _verdict(hyps, holds), wit, [], info)


# --- products ---------------------------------------------------------------------


def _square_hypothesis(phi, i, tol, c=1.0, among=None):
    """Whether d(phi(i)^2, pi^-1(y)) >= c d(phi(i), pi^-1(y)) for every base y (or y in ``among``)."""
    model = phi.model
    v = phi.values[i]
    ys = model.base if among is None else model.base[among]
    sq = model.fiber_dist((v * v)[None, :], ys)
    lin = model.fiber_dist(v[None, :], ys)
    bad = [k for k, (a, b) in enumerate(zip(np.atleast_1d(sq), np.atleast_1d(lin)))
           if not tol.leq(c * b, a)]
    return bad


def _product_core(prop, phi, psi, prod, coeffs, i, sched, tol, hyps, wit):
    model = phi.model
    variant = BASE_TO_MOVING
    s_prod = slope_at(prod, i, sched, variant, tol.denom_floor)
    s_phi = slope_at(phi, i, sched, variant, tol.denom_floor)
    s_psi = slope_at(psi, i, sched, variant, tol.denom_floor)
    c_phi, c_psi = coeffs
    ok, table = True, []
    for k in _nonempty(s_prod):
        lhs = s_prod.per_scale[k].sup
        rhs = c_phi * s_phi.per_scale[k].sup + c_psi * s_psi.per_scale[k].sup
        holds = tol.leq(lhs, rhs)
        ok &= holds
        table.append({"radius": s_prod.per_scale[k].radius, "lhs": lhs, "rhs": rhs,
                      "count": s_prod.per_scale[k].count,
                      "reliable": s_prod.per_scale[k].reliable, "holds": holds})
    used = s_prod.scale_used
    row = next((t for t in table if t["radius"] == used), table[-1] if table else None)
    lhs, rhs = (row["lhs"], row["rhs"]) if row else (0.0, 0.0)
    o = [slope_at(x, i, sched, MOVING_TO_BASE, tol.denom_floor).value for x in (prod, phi, psi)]
    info = {"variant": variant,
            "slopes": {"product": s_prod.value, "phi": s_phi.value, "psi": s_psi.value},
            "sup_phi": sup_norm(phi), "sup_psi": sup_norm(psi),
            "other_variant": {"variant": MOVING_TO_BASE, "lhs": o[0],
                              "rhs": c_phi * o[1] + c_psi * o[2]}}
    return InequalityReport(prop, hyps, lhs, rhs, _verdict(hyps, ok), wit, table, info)


def check_product(phi: Section, psi: Section, ybar, sched: ScaleSchedule | None = None,
                  tol: Tolerance = DEFAULT_TOL) -> InequalityReport:
    """``Ils(phi psi)(ybar) <= sup|psi| Ils(phi)(ybar) + sup|phi| Ils(psi)(ybar)``.

    The product's quotient divides by ``d(phi(ybar)^2, pi^-1(y))``.
    """
    model = phi.model
    if not model.real_valued:
        raise SectionError(f"{model.kind} model is not real valued")
    sched = _sched(sched)
    i = model.resolve(ybar)
    wit = _witness("product", model, {"phi": phi, "psi": psi}, None, {"at": _at(model, i)},
                   sched, tol)
    bad = _square_hypothesis(phi, i, tol)
    hyps = [_agree(phi, psi, i),
            Hypothesis("square-fiber-distance", not bad,
                       f"fails at {len(bad)} base point(s)" if bad else "")]
    prod = pointwise_product(phi, psi)
    return _product_core("product", phi, psi, prod, (sup_norm(psi), sup_norm(phi)), i, sched,
                         tol, hyps, wit)


def check_square(phi: Section, ybar, sched: ScaleSchedule | None = None,
                 tol: Tolerance = DEFAULT_TOL) -> InequalityReport:
    """``Ils(phi^2)(ybar) <= 2 sup|phi| Ils(phi)(ybar)``."""
    model = phi.model
    if not model.real_valued:
        raise SectionError(f"{model.kind} model is not real valued")
    sched = _sched(sched)
    i = model.resolve(ybar)
    wit = _witness("square", model, {"phi": phi}, None, {"at": _at(model, i)}, sched, tol)
    bad = _square_hypothesis(phi, i, tol)
    hyps = [Hypothesis("square-fiber-distance", not bad,
                       f"fails at {len(bad)} base point(s)" if bad else "")]
    return _product_core("square", phi, phi, pointwise_square(phi), (sup_norm(phi), sup_norm(phi)),
                         i, sched, tol, hyps, wit)


# --- section-4 statements ------------------------------------------------------------


def check_inverse(phi: Section, eps: float, tol: Tolerance = DEFAULT_TOL) -> InequalityReport:
    """``|1/phi(y1) - 1/phi(y2)| <= (L_phi / eps^2) d(phi(y1), pi^-1(y2))`` for all pairs.

    Raises PreconditionError when ``phi >= eps > 0`` fails.
    """
    model = phi.model
    inv = pointwise_inverse(phi, eps)
    L = global_constant(phi, tol.denom_floor)
    M = L / eps**2
    v = inv.scalar()
    num = np.abs(v[:, None] - v[None, :])
    den = model.fiber_dist(phi.values[:, None, :], model.base[None, :, :])
    valid = den >= tol.denom_floor
    np.fill_diagonal(valid, False)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(valid, num / np.where(valid, den, 1.0), -np.inf)
    if valid.any():
        k = np.unravel_index(np.argmax(ratio), ratio.shape)
        measured = float(ratio[k])
        pair = [_at(model, k[0]), _at(model, k[1])]
    else:
        measured, pair = 0.0, None
    hyps = [Hypothesis("bounded-below", True, f"min phi = {float(phi.scalar().min())!r}")]
    wit = _witness("inverse", model, {"phi": phi}, None, {"eps": eps}, None, tol)
    info = {"L_phi": L, "M": M, "measured": measured, "extremal_pair": pair}
    return InequalityReport("inverse", hyps, measured, M, _verdict(hyps, tol.leq(measured, M)),
                            wit, [], info)


def check_maxmin(phi: Section, psi: Section, tol: Tolerance = DEFAULT_TOL) -> InequalityReport:
    """Global constants of ``phi v psi`` and ``phi ^ psi`` are at most ``max(L_phi, L_psi)``."""
    model = phi.model
    if not model.real_valued:
        raise SectionError(f"{model.kind} model is not real valued")
    hi, lo = pointwise_max(phi, psi), pointwise_min(phi, psi)
    d = {name: global_constant_detail(s, tol.denom_floor)
         for name, s in (("phi", phi), ("psi", psi), ("max", hi), ("min", lo))}
    rhs = max(d["phi"].value, d["psi"].value)
    lhs = max(d["max"].value, d["min"].value)
    wit = _witness("maxmin", model, {"phi": phi, "psi": psi}, None, {}, None, tol)
    hyps = [_is_section(phi), _is_section(psi, "psi")]
    info = {
        "L_phi": d["phi"].value, "L_psi": d["psi"].value,
        "L_max": d["max"].value, "L_min": d["min"].value,
        "gap": rhs - lhs,
        "extremal_pairs": {k: ([_at(model, j) for j in v.witness] if v.witness else None)
                           for k, v in d.items()},
    }
    return InequalityReport("maxmin", hyps, lhs, rhs, _verdict(hyps, tol.leq(lhs, rhs)), wit, [],
                            info)


# --- stronger versions, pointwise over the whole base -----------------------------------


def _images_equal(phi, psi):
    a, b = phi.values, psi.values
    d = np.asarray(phi.model.dist(a[:, None, :], b[None, :, :]), float)
    return bool(np.all(d.min(axis=1) <= AGREE_TOL) and np.all(d.min(axis=0) <= AGREE_TOL))


def check_strong_leibniz(phi: Section, psi: Section, t: float,
                         sched: ScaleSchedule | None = None,
                         tol: Tolerance = DEFAULT_TOL) -> InequalityReport:
    """``Ils(t phi + (1-t) psi)(y) <= t l Ils(phi)(y) + (1-t) l Ils(psi)(y)`` at every base point.

    ``l`` bounds ratios of fiber distances from the sections' values.  The
    image-equality hypothesis is tested on the sample; when it fails the
    inequality is still evaluated and reported under ``info``.
    """
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    sched = _sched(sched)
    model = phi.model
    wit = _witness("strong-leibniz", model, {"phi": phi, "psi": psi}, None, {"t": t}, sched, tol)
    try:
        ell = max(fiber_ratio_bound(phi, tol.denom_floor)[0],
                  fiber_ratio_bound(psi, tol.denom_floor)[0])
    except RatioUndefined:
        raise
    hyps = [Hypothesis("normed-model", bool(model.normed)),
            Hypothesis("equal-images", _images_equal(phi, psi)),
            Hypothesis("ratio-bound", bool(np.isfinite(ell)), f"l = {ell!r}")]
    if not model.normed or model.kind == "abs-value":
        hyps.append(Hypothesis("combination-defined", False))
        return InequalityReport("strong-leibniz", hyps, float("nan"), float("nan"), UNMET, wit,
                                [], {"ell": ell})
    eta = convex_combine(WeightFunction.constant(model, t), phi, psi)
    ok, table, worst = True, [], None
    for y in range(model.m):
        se = slope_at(eta, y, sched, MOVING_TO_BASE, tol.denom_floor)
        sp = slope_at(phi, y, sched, MOVING_TO_BASE, tol.denom_floor)
        sq = slope_at(psi, y, sched, MOVING_TO_BASE, tol.denom_floor)
        point_ok = True
        for k in _nonempty(se):
            lhs = se.per_scale[k].sup
            rhs = t * ell * sp.per_scale[k].sup + (1 - t) * ell * sq.per_scale[k].sup
            point_ok &= tol.leq(lhs, rhs)
        lhs = se.value
        rhs = t * ell * sp.value + (1 - t) * ell * sq.value
        ok &= point_ok
        table.append({"y": _at(model, y), "lhs": lhs, "rhs": rhs, "holds": point_ok})
        if worst is None or rhs - lhs < worst[1] - worst[0]:
            worst = (lhs, rhs)
    worst = worst or (0.0, 0.0)
    info = {"ell": ell, "all_points_hold": ok, "t": t}
    return InequalityReport("strong-leibniz", hyps, worst[0], worst[1], _verdict(hyps, ok), wit,
                            table, info)


def check_strong_product(phi: Section, M: float, c: float = 1.0, local: bool = False,
                         sched: ScaleSchedule | None = None,
                         tol: Tolerance = DEFAULT_TOL) -> InequalityReport:
    """``Ils(phi^2)(y) <= (2M / c) Ils(phi)(y)`` at every base point.

    Hypothesis: ``d(phi(z)^2, pi^-1(y)) >= c d(phi(z), pi^-1(y))`` for all
    ``y, z``.  With ``local=True`` it is required only for ``z`` within the
    largest radius of ``y``, and points where it fails are excluded (and
    counted) instead of voiding the whole check.
    """
    model = phi.model
    if not model.real_valued:
        raise SectionError(f"{model.kind} model is not real valued")
    if not c > 0:
        raise ValueError("c must be positive")
    s = sup_norm(phi)
    if M < s:
        raise PreconditionError(f"M = {M!r} is below sup|phi| = {s!r}")
    sched = _sched(sched)
    wit = _witness("strong-product", model, {"phi": phi}, None,
                   {"M": M, "c": c, "local": local}, sched, tol)
    sq = pointwise_square(phi)
    # H[z, y]: hypothesis for the pair (moving z, base y)
    F2 = model.fiber_dist(sq.values[:, None, :], model.base[None, :, :])
    F1 = model.fiber_dist(phi.values[:, None, :], model.base[None, :, :])
    H = F2 + np.abs(F2) * tol.rel + tol.abs >= c * F1
    np.fill_diagonal(H, True)
    table, ok, worst, excluded = [], True, None, 0
    for y in range(model.m):
        if local:
            near = model.ball(y, sched.radii[0])
            hyp_y = bool(H[near, y].all())
        else:
            hyp_y = bool(H[:, y].all())
        s2 = slope_at(sq, y, sched, MOVING_TO_BASE, tol.denom_floor)
        s1 = slope_at(phi, y, sched, MOVING_TO_BASE, tol.denom_floor)
        point_ok = True
        for k in _nonempty(s2):
            point_ok &= tol.leq(s2.per_scale[k].sup, 2 * M / c * s1.per_scale[k].sup)
        lhs, rhs = s2.value, 2 * M / c * s1.value
        table.append({"y": _at(model, y), "lhs": lhs, "rhs": rhs, "hypothesis": hyp_y,
                      "holds": point_ok})
        if not hyp_y:
            excluded += 1
            continue
        ok &= point_ok
        if worst is None or rhs - lhs < worst[1] - worst[0]:
            worst = (lhs, rhs)
    if local:
        hyp = Hypothesis("square-fiber-distance", excluded < model.m,
                         f"{excluded} point(s) excluded")
    else:
        hyp = Hypothesis("square-fiber-distance", bool(H.all()),
                         "" if H.all() else f"fails for {int((~H).sum())} pair(s)")
    hyps = [Hypothesis("bounded", True, f"sup|phi| = {s!r} <= M"), hyp]
    if worst is None:
        worst = (float("nan"), float("nan"))
    info = {"excluded_points": excluded, "M": M, "c": c, "local": local}
    return InequalityReport("strong-product", hyps, worst[0], worst[1], _verdict(hyps, ok), wit,
                            table, info)


# --- relative formulations ------------------------------------------------------------


class FamilyError(ValueError):
    pass


def constant_height_family(phi: Section) -> dict:
    """For each base index ``i``, the constant-height section through ``phi(i)``."""
    model = phi.model
    if model.kind != "linear-projection":
        raise FamilyError("the built-in family needs a linear-projection model")
    return {
        i: Section(model, np.broadcast_to(phi.params[i], phi.params.shape), f"flat{i}")
        for i in range(model.m)
    }


def check_equivalence_families(phi: Section, family=None, L: float = 1.0,
                               tol: Tolerance = DEFAULT_TOL) -> InequalityReport:
    """Relative constants against a family of ``L``-Lipschitz sections vs the global constant.

    ``family`` is either ``None`` (constant-height sections, linear models
    only) or a list of sections; each point ``phi(y)`` must be hit by some
    member.  Passes when both constants are finite or both infinite.
    """
    model = phi.model
    names = None
    if family is None:
        fam = constant_height_family(phi)
        members = list(fam.values())
    else:
        members = list(family)
        fam = {}
        for i in range(model.m):
            for s in members:
                if float(model.dist(s.values[i], phi.values[i])) <= AGREE_TOL:
                    fam[i] = s
                    break
            else:
                raise FamilyError(f"no family member passes through phi({_at(model, i)})")
        names = [f"member{k}" for k in range(len(members))]
    member_constants = {}
    for i, s in fam.items():
        key = id(s)
        if key not in member_constants:
            member_constants[key] = global_constant(s, tol.denom_floor)
        if not tol.leq(member_constants[key], L):
            raise FamilyError(f"family member through phi({_at(model, i)}) has constant "
                              f"{member_constants[key]!r} > L = {L!r}")
    L2 = global_constant(phi, tol.denom_floor)
    rel = {i: min_constant_wrt(phi, s, i, tol) for i, s in fam.items()}
    L1 = max(rel.values()) if rel else 1.0
    worst = max(rel, key=rel.get) if rel else None
    holds = bool(np.isfinite(L1)) == bool(np.isfinite(L2))
    secs = {"phi": phi}
    args = {"L": L}
    if names is not None:
        secs.update(dict(zip(names, members)))
        args["family"] = names
    wit = _witness("equivalence-families", model, secs, None, args, None, tol)
    hyps = [Hypothesis("family-lipschitz", True, f"every member has constant <= {L!r}")]
    info = {"L1": L1, "L2": L2, "L1_point": _at(model, worst) if worst is not None else None,
            "family_size": len({id(s) for s in fam.values()})}
    return InequalityReport("equivalence-families", hyps, L1, L2, _verdict(hyps, holds), wit, [],
                            info)


def check_vector_closure(psi: Section, phi1: Section, lam1: float, phi2: Section, lam2: float,
                         yhat, tol: Tolerance = DEFAULT_TOL) -> InequalityReport:
    """``phi_i`` relative to ``lam_i psi`` at ``lam_i psi(yhat)`` implies the same for the sum.

    The sum's constant is compared with ``(lam1 L1 + lam2 L2) / (lam1 + lam2)``.
    """
    model = psi.model
    if model.kind != "linear-projection":
        raise SectionError("vector closure needs a linear-projection model")
    i = model.resolve(yhat)
    wit = _witness("vector-closure", model, {"psi": psi, "phi1": phi1, "phi2": phi2}, None,
                   {"at": _at(model, i), "lambda1": lam1, "lambda2": lam2}, None, tol)
    hyps = [Hypothesis("nonnegative-scalars", lam1 >= 0 and lam2 >= 0 and lam1 + lam2 > 0,
                       f"lambda = ({lam1!r}, {lam2!r})")]
    if not hyps[0].satisfied:
        return InequalityReport("vector-closure", hyps, float("nan"), float("nan"), UNMET, wit)
    ref1 = GeneralizedMap(model, lam1 * psi.values, "lambda1 psi")
    ref2 = GeneralizedMap(model, lam2 * psi.values, "lambda2 psi")
    consts = []
    for name, phi, ref in (("phi1", phi1, ref1), ("phi2", phi2, ref2)):
        try:
            Lk = min_constant_wrt(phi, ref, i, tol)
        except PreconditionError as exc:
            hyps.append(Hypothesis(f"{name}-member", False, str(exc)))
            continue
        hyps.append(Hypothesis(f"{name}-member", bool(np.isfinite(Lk)), f"constant {Lk!r}"))
        consts.append(Lk)
    if not all(h.satisfied for h in hyps):
        return InequalityReport("vector-closure", hyps, float("nan"), float("nan"), UNMET, wit)
    L1, L2 = consts
    total = GeneralizedMap(model, phi1.values + phi2.values, "sum")
    ref = GeneralizedMap(model, (lam1 + lam2) * psi.values, "sum reference")
    try:
        L = min_constant_wrt(total, ref, i, tol)
    except PreconditionError:
        L = float("inf")
    rhs = (lam1 * L1 + lam2 * L2) / (lam1 + lam2)
    holds = bool(np.isfinite(L)) and tol.leq(L, rhs)
    info = {"L1": L1, "L2": L2, "sum_constant": L, "sum_is_section": total.is_section}
    return InequalityReport("vector-closure", hyps, L, rhs, _verdict(hyps, holds), wit, [], info)


# --- model-file dispatch ------------------------------------------------------------------


def sched_from_args(args: dict) -> ScaleSchedule:
    s = args.get("sched")
    if not s:
        return ScaleSchedule.geometric()
    if "radii" in s:
        return ScaleSchedule(tuple(s["radii"]), int(s.get("min_samples", 1)))
    return ScaleSchedule.geometric(float(s.get("r0", 0.1)), int(s.get("halvings", 6)),
                                   int(s.get("min_samples", 1)))


def tol_from_args(args: dict) -> Tolerance:
    t = args.get("tol") or {}
    return Tolerance(float(t.get("rel", 1e-9)), float(t.get("abs", 1e-12)),
                     float(t.get("denom_floor", 1e-12)))


def _point(model, at):
    return model.resolve(int(at)) if isinstance(at, int) and not isinstance(at, bool) and \
        model.base_dim > 1 else model.index_of(at)


def run_check(ws: Workspace, check: dict, tol: Tolerance | None = None) -> InequalityReport:
    prop = check["prop"]
    args = check.get("args", {})
    S = ws.sections
    model = ws.model
    tol = tol or tol_from_args(args)
    sched = sched_from_args(args)
    at = (lambda: model.index_of(args["at"]))
    if prop == "chain":
        return check_chain(S[args["phi"]], at(), sched, tol)
    if prop == "leibniz":
        return check_leibniz(S[args["phi"]], S[args["psi"]], ws.weights[args["f"]], at(), sched,
                             tol)
    if prop == "convex-membership":
        return check_convex_membership(S[args["phi"]], S[args["psi"]], ws.weights[args["f"]],
                                       at(), sched, tol)
    if prop == "affine":
        return check_affine(S[args["phi"]], S[args["psi"]], float(args["alpha"]),
                            float(args["beta"]), at(), sched, tol)
    if prop == "ils-set-convex":
        return check_ils_set_convex(S[args["psi"]], S[args["phi1"]], S[args["phi2"]], at(),
                                    float(args["t"]), tol)
    if prop == "product":
        return check_product(S[args["phi"]], S[args["psi"]], at(), sched, tol)
    if prop == "square":
        return check_square(S[args["phi"]], at(), sched, tol)
    if prop == "inverse":
        return check_inverse(S[args["phi"]], float(args["eps"]), tol)
    if prop == "maxmin":
        return check_maxmin(S[args["phi"]], S[args["psi"]], tol)
    if prop == "strong-leibniz":
        return check_strong_leibniz(S[args["phi"]], S[args["psi"]], float(args["t"]), sched, tol)
    if prop == "strong-product":
        return check_strong_product(S[args["phi"]], float(args["M"]), float(args.get("c", 1.0)),
                                    bool(args.get("local", False)), sched, tol)
    if prop == "equivalence-families":
        fam = args.get("family")
        family = [S[n] for n in fam] if fam else None
        return check_equivalence_families(S[args["phi"]], family, float(args.get("L", 1.0)), tol)
    if prop == "vector-closure":
        return check_vector_closure(S[args["psi"]], S[args["phi1"]], float(args["lambda1"]),
                                    S[args["phi2"]], float(args["lambda2"]), at(), tol)
    raise ValueError(f"unknown proposition {prop!r}; expected one of {PROPS}")


def run_document(doc: dict, tol: Tolerance | None = None) -> list:
    """Load a model-file document and run each of its checks."""
    ws = load_document(doc)
    return [run_check(ws, c, tol) for c in ws.checks]
