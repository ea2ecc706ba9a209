"""Acceptance suite: twelve criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline, or
directly with ``python3 tests/test_acceptance.py`` for just the summary.
Each criterion is a function returning ``(ok, detail)`` so both entry points
share one implementation.  Oracles here are written against numpy only and
do not call the library routine under test.
"""

import contextlib
import io
import json
import math
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from intrinsic_lipschitz.cli import main as cli_main
from intrinsic_lipschitz.constants import (
    DEFAULT_TOL,
    ScaleSchedule,
    asymptotic_slope_at,
    cone_contains,
    global_constant,
    min_constant_wrt,
    slope_at,
)
from intrinsic_lipschitz.hunt import hunt, run_trials
from intrinsic_lipschitz.metric import koranyi_distance
from intrinsic_lipschitz.models import (
    GridSpec,
    make_abs_value_model,
    make_circle_model,
    make_explicit_model,
    make_heisenberg_model,
    make_linear_projection_model,
    make_rng,
    random_section,
)
from intrinsic_lipschitz.sections import Section
from intrinsic_lipschitz.verify import (
    FAIL,
    PASS,
    UNMET,
    check_chain,
    check_equivalence_families,
    check_ils_set_convex,
    check_inverse,
    check_maxmin,
    run_document,
)

TOL = DEFAULT_TOL


# --- 1 --------------------------------------------------------------------------------------


def criterion_1():
    model = make_linear_projection_model(2, 1, 2, GridSpec(((0, 1, 1e-3),)))
    y = model.base[:, 0]
    dy = y[:, None] - y[None, :]
    off = ~np.eye(len(y), dtype=bool)
    parts, ok = [], True
    for a in (0.0, 1.0, 3.0):
        lib = global_constant(Section(model, a * y))
        closed = math.sqrt(1 + a * a)
        brute = float((np.hypot(dy, a * dy)[off] / np.abs(dy)[off]).max())
        ok &= abs(lib - closed) <= 1e-9 and abs(lib - brute) <= 1e-9
        parts.append(f"a={a:g}: {lib:.12g} vs {closed:.12g}")
    return ok, "; ".join(parts)


# --- 2 --------------------------------------------------------------------------------------


def criterion_2():
    grid = GridSpec(((0, 2, 0.01),)).refined(1.0, 0.1, 16)
    model = make_linear_projection_model(2, 1, 2, grid)
    phi = Section(model, model.base[:, 0] ** 2)
    est = slope_at(phi, [1.0], ScaleSchedule.geometric(0.1, 6))
    sups = [e.sup for e in est.per_scale if e.count]
    violations = sum(a < b for a, b in zip(sups, sups[1:]))
    rel = abs(est.value - math.sqrt(5)) / math.sqrt(5)
    ok = rel <= 0.02 and violations == 0
    return ok, f"slope {est.value:.6f} (rel err {rel:.2%}), monotonicity violations {violations}"


# --- 3 --------------------------------------------------------------------------------------


def _chain_models():
    return [
        make_linear_projection_model(2, 1, 2, GridSpec(((0, 1, 0.01),))),
        make_abs_value_model(0.5, 2.0, GridSpec(((0.5, 2.0, 0.01),))),
        make_circle_model(GridSpec(((0, 0.99, 0.01),))),
        make_heisenberg_model(GridSpec(((-0.3, 0.3, 0.05), (-0.3, 0.3, 0.05)))),
    ]


def criterion_3():
    models = _chain_models()
    sched = ScaleSchedule.geometric(0.1, 4)
    violations, below_one, nonempty = 0, 0, 0
    for seed in range(100):
        model = models[seed % 4]
        rng = make_rng(3, seed)
        phi = random_section(model, float(rng.uniform(0.2, 2.0)), seed)
        z = int(rng.integers(model.m))
        if check_chain(phi, z, sched, TOL).verdict != PASS:
            violations += 1
        s = slope_at(phi, z, sched)
        a = asymptotic_slope_at(phi, z, sched)
        g = global_constant(phi)
        for es, ea in zip(s.per_scale, a.per_scale):
            if es.count and not (TOL.leq(es.sup, ea.sup) and TOL.leq(ea.sup, g)):
                violations += 1
        if not s.isolated:
            nonempty += 1
            below_one += not TOL.leq(1.0, s.value)
    ok = violations == 0 and below_one == 0
    return ok, (f"100 sections, chain violations {violations}, "
                f"slope < 1 on {below_one} of {nonempty} nondegenerate instances")


# --- 4 --------------------------------------------------------------------------------------


def criterion_4():
    results = run_trials("leibniz", "linear", 200, 4, shrink=False)
    fails = sum(r.verdict == FAIL for r in results)
    unmet = sum(r.verdict == UNMET for r in results)
    ran = sum(r.report is not None for r in results)
    # identity cases: f = 1 gives eta = phi, f = 0 gives eta = psi
    worst = 0.0
    for r in results[:50]:
        doc = json.loads(json.dumps(r.document))
        for c in (1.0, 0.0):
            doc["weights"]["f"] = str(c)
            (rep,) = run_document(doc)
            worst = max(worst, abs(rep.lhs - rep.rhs))
    ok = fails == 0 and ran == 200 and worst <= 1e-12
    return ok, (f"200 trials: fail {fails}, hypotheses-unmet {unmet}; "
                f"max |lhs-rhs| at f=1/f=0 {worst:.3g}")


# --- 5 --------------------------------------------------------------------------------------


def criterion_5():
    counts = {PASS: 0, FAIL: 0, UNMET: 0, "skipped": 0}
    for prop in ("product", "square"):
        for gen, seed in (("circle", 51), ("abs", 52)):
            for r in run_trials(prop, gen, 100, seed, shrink=False):
                counts[r.verdict] = counts.get(r.verdict, 0) + 1
    ok = counts[FAIL] == 0 and counts[PASS] > 0
    return ok, (f"400 trials (product+square, circle+abs-value): pass {counts[PASS]}, "
                f"fail {counts[FAIL]}, hypothesis-unmet excluded {counts[UNMET]}, "
                f"skipped {counts['skipped']}")


# --- 6 --------------------------------------------------------------------------------------


def criterion_6():
    model = make_abs_value_model(0.5, 2.0, GridSpec(((0.5, 2.0, 1e-3),)))
    r = check_inverse(Section.canonical(model), 0.5)
    upper = r.lhs <= 4.0 + 4.0 * 1e-9 and r.verdict == PASS
    lower = r.lhs >= 4.0 - 1e-3
    return upper and lower, (f"measured {r.lhs:.9f}, bound M = {r.rhs:.9f}; upper ok {upper}, "
                             f"needs >= 3.999: {lower}")


# --- 7 --------------------------------------------------------------------------------------

# Every constant below was found by enumerating all ordered pairs (y1, y2),
# y1 != y2, of |phi(y1) - phi(y2)| / min over the fiber of y2, in exact rational
# arithmetic.  Order: L_phi, L_psi, L_max, L_min.
MAXMIN_FIXTURES = [
    # abs-value: base points, sign patterns
    ("abs", ["1/2", "1", "2"], [1, 1, 1], [-1, -1, -1], ["1", "1", "1", "1"]),
    ("abs", ["1/2", "1", "3/2", "2"], [1, 1, -1, -1], [-1, -1, 1, 1], ["5", "5", "1", "1"]),
    # phi = (1, -2): pair 1 vs fiber {2, -2} gives |1 + 2| / 1 = 3
    ("abs", ["1", "2"], [1, -1], [-1, 1], ["3", "3", "1", "1"]),
    ("abs", ["1/2", "1", "3/2", "2", "5/2"], [1, -1, 1, -1, 1], [1, 1, 1, 1, 1],
     ["9", "1", "1", "9"]),
    ("abs", ["1", "2", "3"], [1, 1, -1], [1, -1, -1], ["5", "3", "5", "3"]),
    # explicit: fibers, phi values, psi values
    ("explicit", [[-2, -1], [1, 3], [2]], [-2, 1, 2], [-1, 3, 2], ["3/2", "2", "2", "3/2"]),
    ("explicit", [[0], [1], [2]], [0, 1, 2], [0, 1, 2], ["1", "1", "1", "1"]),
    ("explicit", [[0, 5], [1], [3, -3]], [0, 1, 3], [5, 1, -3], ["3/2", "4", "4", "2"]),
    ("explicit", [[0, 2], [1, 4]], [0, 1], [2, 4], ["1", "2", "2", "1"]),
    ("explicit", [[-1, 1], [2], [-3, 3], [4]], [-1, 2, 3, 4], [1, 2, -3, 4],
     ["3", "7", "1", "7"]),
]


def _fixture(kind, base, a, b):
    if kind == "abs":
        ys = np.array([float(Fraction(v)) for v in base])
        model = make_abs_value_model(float(ys.min()), float(ys.max()), ys[:, None])
        return model, Section(model, a), Section(model, b)
    xs = [x for fib in base for x in fib]
    proj = [j for j, fib in enumerate(base) for _ in fib]
    model = make_explicit_model(np.array(xs, float)[:, None], proj,
                                np.arange(len(base), dtype=float)[:, None])
    return model, Section(model, [xs.index(v) for v in a]), Section(model, [xs.index(v) for v in b])


def criterion_7():
    curated_ok = 0
    for kind, base, a, b, expected in MAXMIN_FIXTURES:
        _, phi, psi = _fixture(kind, base, a, b)
        r = check_maxmin(phi, psi)
        got = [r.info[k] for k in ("L_phi", "L_psi", "L_max", "L_min")]
        exp = [float(Fraction(e)) for e in expected]
        if r.verdict == PASS and np.allclose(got, exp, rtol=1e-12, atol=0):
            curated_ok += 1
    a = hunt("explicit", "maxmin", 60, 11)
    b = hunt("explicit", "maxmin", 60, 11)
    same = [json.dumps(f.document) for f in a.failures] == [json.dumps(f.document) for f in b.failures]
    replays = sum(run_document(f.document)[0].verdict == FAIL for f in a.failures)
    ok = curated_ok == len(MAXMIN_FIXTURES) and same and replays == len(a.failures)
    return ok, (f"curated {curated_ok}/{len(MAXMIN_FIXTURES)} pass with enumerated constants; "
                f"hunt deterministic {same}; witnesses replayed as fail "
                f"{replays}/{len(a.failures)}")


# --- 8 --------------------------------------------------------------------------------------


def criterion_8():
    agree, true_count = 0, 0
    for k in range(100):
        rng = make_rng(8, k)
        p = float(rng.choice([1.0, 2.0, np.inf]))
        model = make_linear_projection_model(2 + int(k % 2), 1, p,
                                             GridSpec(((-1, 1, 0.05),) * (1 + int(k % 2))))
        psi = random_section(model, 1.0, k, 0)
        phi = random_section(model, 1.0, k, 1)
        i = int(rng.integers(model.m))
        phi = Section(model, phi.params - phi.params[i] + psi.params[i])
        Lmin = min_constant_wrt(phi, psi, i)
        L = float(max(1.0, Lmin * rng.choice([0.5, 0.9, 1.0, 1.1, 2.0])))
        xhat = psi.values[i]
        by_cone = not any(cone_contains(psi, xhat, L, x) for x in phi.values)
        num = [float(model.dist(phi.values[j], psi.values[j])) for j in range(model.m)]
        den = [float(model.dist(xhat, psi.values[j])) for j in range(model.m)]
        by_ineq = all(TOL.leq(n, L * d) for n, d in zip(num, den))
        agree += by_cone == by_ineq
        true_count += by_cone
    return agree == 100, (f"100 configurations, verdicts agree on {agree} "
                          f"({true_count} Lipschitz, {100 - true_count} not)")


# --- 9 --------------------------------------------------------------------------------------


def criterion_9():
    members, endpoint_err, trials = 0, 0.0, 0
    for k in range(100):
        model = make_linear_projection_model(2, 1, 2, GridSpec(((-1, 1, 0.04),)))
        rng = make_rng(9, k)
        i = int(rng.integers(model.m))
        psi0 = random_section(model, 1.0, k, 0)
        phis = []
        for s in (1, 2):
            h = random_section(model, float(rng.uniform(0.5, 3.0)), k, s).params
            phis.append(Section(model, h - h[i] + psi0.params[i]))
        for t in (0.0, 0.25, 0.5, 0.75, 1.0):
            r = check_ils_set_convex(psi0, phis[0], phis[1], i, t)
            trials += 1
            if r.verdict == PASS and math.isfinite(r.lhs) and r.info["is_section"]:
                members += 1
            if t == 1.0:
                endpoint_err = max(endpoint_err, abs(r.lhs - r.info["L1"]))
            if t == 0.0:
                endpoint_err = max(endpoint_err, abs(r.lhs - r.info["L2"]))
    ok = members == trials and endpoint_err <= 1e-12
    return ok, (f"{members}/{trials} combinations are members with finite constant; "
                f"endpoint constant error {endpoint_err:.3g}")


# --- 10 -------------------------------------------------------------------------------------


def _gauge(x, y, t):
    return ((x * x + y * y) ** 2 + 16 * t * t) ** 0.25


def _dist_to_coset(p, a, b, s):
    # (a, b, s)^-1 * p with the law (x, y, t)(x', y', t') = (x+x', y+y', t+t'+(xy'-yx')/2)
    x, y = p[0] - a, p[1] - b
    t = p[2] - s + (-a * p[1] + b * p[0]) / 2
    return _gauge(x, y, t)


def zoom_grid_fiber_distance(p, a, b, span=50.0, n=4001, rounds=12):
    """Dense grid over the fiber height, zoomed around the best sample each round."""
    lo, hi = -span, span
    best = math.inf
    for _ in range(rounds):
        s = np.linspace(lo, hi, n)
        d = _dist_to_coset(p, a, b, s)
        k = int(np.argmin(d))
        best = min(best, float(d[k]))
        h = (hi - lo) / (n - 1)
        lo, hi = s[k] - 4 * h, s[k] + 4 * h
    return best


def criterion_10():
    rng = make_rng(10)
    worst = 0.0
    for _ in range(50):
        p = rng.normal(size=3) * [1, 1, 2]
        ab = rng.normal(size=2)
        model = make_heisenberg_model(ab[None, :])
        fast = float(model.fiber_dist(p, ab))
        worst = max(worst, abs(fast - zoom_grid_fiber_distance(p, *ab)))
    axioms_bad = 0
    for _ in range(1000):
        p, q, r = rng.normal(size=(3, 3)) * 2
        dpq, dqp = koranyi_distance(p, q), koranyi_distance(q, p)
        dqr, dpr = koranyi_distance(q, r), koranyi_distance(p, r)
        bad = (dpq < 0 or abs(dpq - dqp) > 1e-9 or dpr > dpq + dqr + 1e-9
               or koranyi_distance(p, p) != 0.0 or (dpq == 0) != np.array_equal(p, q))
        axioms_bad += bool(bad)
    ok = worst <= 1e-6 and axioms_bad == 0
    return ok, f"max fiber-distance gap {worst:.3g} over 50 pairs; axiom violations {axioms_bad}/1000"


# --- 11 -------------------------------------------------------------------------------------


def criterion_11():
    rows, agree = [], 0
    for k in range(20):
        model = make_linear_projection_model(2 + k % 2, 1 + k % 2, 2,
                                             GridSpec(((0, 1, 0.02),)))
        phi = random_section(model, 0.5 + 0.25 * (k % 5), k)
        r = check_equivalence_families(phi)
        L1, L2 = r.lhs, r.rhs
        agree += math.isfinite(L1) == math.isfinite(L2) and r.verdict == PASS
        rows.append(f"{L1:.4g}/{L2:.4g}")
    return agree == 20, f"finite<=>finite on {agree}/20; L1/L2: " + " ".join(rows)


# --- 12 -------------------------------------------------------------------------------------


def _cli(*argv):
    with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
        return cli_main([str(a) for a in argv])


def criterion_12():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        same, replay_ok, replays = True, True, 0
        for tag in ("a", "b"):
            _cli("verify", "--prop", "chain", "--trials", 30, "--seed", 7,
                 "--out", tmp / f"verify_chain_{tag}.json")
            _cli("verify", "--prop", "maxmin", "--generator", "explicit", "--trials", 40,
                 "--seed", 11, "--out", tmp / f"verify_mm_{tag}.json",
                 "--witness-dir", tmp / f"vw_{tag}")
            _cli("hunt", "--prop", "maxmin", "--generator", "explicit", "--trials", 40,
                 "--seed", 11, "--out", tmp / f"hunt_{tag}", "--quiet")
        for name in ("verify_chain_{}.json", "verify_mm_{}.json", "hunt_{}/report.json"):
            same &= (tmp / name.format("a")).read_bytes() == (tmp / name.format("b")).read_bytes()
        for d in ("vw_a", "hunt_a"):
            for w in sorted((tmp / d).glob("witness_*.json")):
                same &= w.read_bytes() == (tmp / d.replace("_a", "_b") / w.name).read_bytes()
                replay_ok &= _cli("verify", w) == 1
                replays += 1
    ok = same and replay_ok and replays > 0
    return ok, f"byte-identical reports {same}; {replays} witness files replayed as fail {replay_ok}"


CRITERIA = [
    (1, "graph-section constant", criterion_1),
    (2, "slope convergence", criterion_2),
    (3, "chain invariant", criterion_3),
    (4, "Leibniz suite", criterion_4),
    (5, "product/square suite", criterion_5),
    (6, "inverse tightness", criterion_6),
    (7, "max/min", criterion_7),
    (8, "cone/inequality equivalence", criterion_8),
    (9, "convexity of relative set", criterion_9),
    (10, "Heisenberg oracle", criterion_10),
    (11, "equivalence of formulations", criterion_11),
    (12, "determinism and round trip", criterion_12),
]


def _line(n, name, ok, detail):
    return f"[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {name}: {detail}"


@pytest.mark.parametrize("n,name,fn", CRITERIA, ids=[f"c{n:02d}" for n, _, _ in CRITERIA])
def test_criterion(n, name, fn, capsys):
    ok, detail = fn()
    with capsys.disabled():
        print("\n" + _line(n, name, ok, detail))
    assert ok, detail


def test_inverse_grid_gap_is_one_grid_step():
    # the best pair on a grid of step h is (eps, eps + h): 1 / (eps (eps + h))
    for h in (1e-2, 2e-3, 1e-3):
        model = make_abs_value_model(0.5, 2.0, GridSpec(((0.5, 2.0, h),)))
        r = check_inverse(Section.canonical(model), 0.5)
        assert r.lhs == pytest.approx(1 / (0.5 * (0.5 + h)), rel=1e-9)


if __name__ == "__main__":
    failed = 0
    for n, name, fn in CRITERIA:
        ok, detail = fn()
        failed += not ok
        print(_line(n, name, ok, detail))
    raise SystemExit(1 if failed else 0)
