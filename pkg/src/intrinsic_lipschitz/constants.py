"""Global, local and asymptotic intrinsic Lipschitz constants of sampled sections.

The local slope is a limsup as the ball around ``z`` shrinks.  On a sample
it is read off a :class:`ScaleSchedule`: the supremum of the difference
quotient over each ball ``B(z, r)`` is tabulated, and the estimate is the
value at the smallest scale that still holds ``min_samples`` neighbours.

Two denominators appear in practice and both are supported:

``moving-to-base-fiber``
    ``d(phi(y), pi^-1(z))`` for a moving point ``y`` near the base point ``z``.
``base-to-moving-fiber``
    ``d(phi(z), pi^-1(y))``: the distance from the fixed value to the moving
    point's fiber.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .metric import DENOM_FLOOR
from .sections import GeneralizedMap, PreconditionError

MOVING_TO_BASE = "moving-to-base-fiber"
BASE_TO_MOVING = "base-to-moving-fiber"
VARIANTS = (MOVING_TO_BASE, BASE_TO_MOVING)


class InternalConsistencyError(AssertionError):
    pass


@dataclass(frozen=True)
class Tolerance:
    rel: float = 1e-9
    abs: float = 1e-12
    denom_floor: float = DENOM_FLOOR

    def leq(self, lhs: float, rhs: float) -> bool:
        if np.isnan(lhs) or np.isnan(rhs):
            return False
        if np.isinf(rhs) and rhs > 0:
            return True
        return bool(lhs <= rhs + abs(rhs) * self.rel + self.abs)


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class ScaleSchedule:
    radii: tuple
    min_samples: int = 1

    def __post_init__(self):
        r = np.asarray(self.radii, float)
        if r.ndim != 1 or len(r) == 0:
            raise ValueError("need at least one radius")
        if np.any(r <= 0) or np.any(np.diff(r) >= 0):
            raise ValueError("radii must be positive and strictly decreasing")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")
        object.__setattr__(self, "radii", tuple(float(x) for x in r))

    @classmethod
    def geometric(cls, r0: float = 0.1, halvings: int = 6, min_samples: int = 1):
        return cls(tuple(r0 * 0.5**k for k in range(halvings + 1)), min_samples)

    def to_dict(self):
        return {"radii": list(self.radii), "min_samples": self.min_samples}


@dataclass(frozen=True)
class ScaleEntry:
    radius: float
    sup: float
    count: int
    reliable: bool


@dataclass
class SlopeEstimate:
    per_scale: list
    value: float
    variant: str
    isolated: bool = False
    scale_used: float | None = None
    skipped: int = 0

    def table(self) -> list:
        return [
            {"radius": e.radius, "sup": e.sup, "count": e.count, "reliable": e.reliable}
            for e in self.per_scale
        ]

    def sup_at(self, r: float) -> float:
        for e in self.per_scale:
            if e.radius == r:
                return e.sup
        raise KeyError(r)


class ConstantDetail(NamedTuple):
    value: float
    skipped: int
    witness: tuple | None  # base indices (y1, y2) of the maximizing pair


def _ratio_matrix(model, values, rows, cols, denom_floor):
    """Ratios d(v[i], v[j]) / d(v[i], pi^-1(base[j])) for i in rows, j in cols."""
    vi = values[rows][:, None, :]
    num = model.dist(vi, values[cols][None, :, :])
    den = model.fiber_dist(vi, model.base[cols][None, :, :])
    num = np.asarray(num, float)
    den = np.asarray(den, float)
    valid = den >= denom_floor
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(valid, num / np.where(valid, den, 1.0), -np.inf)
    return ratio, valid


def global_constant_detail(phi: GeneralizedMap, denom_floor: float = DENOM_FLOOR,
                           block: int = 512) -> ConstantDetail:
    model = phi.model
    m = model.m
    if m < 2:
        return ConstantDetail(1.0, 0, None)
    best, arg, skipped = -np.inf, None, 0
    cols = np.arange(m)
    for start in range(0, m, block):
        rows = np.arange(start, min(m, start + block))
        ratio, valid = _ratio_matrix(model, phi.values, rows, cols, denom_floor)
        ratio[rows - start, rows] = -np.inf
        diag = np.zeros_like(valid)
        diag[rows - start, rows] = True
        skipped += int((~valid & ~diag).sum())
        k = np.unravel_index(np.argmax(ratio), ratio.shape)
        if ratio[k] > best:
            best, arg = float(ratio[k]), (int(rows[k[0]]), int(cols[k[1]]))
    if best == -np.inf:
        return ConstantDetail(1.0, skipped, None)
    return ConstantDetail(best, skipped, arg)


def global_constant(phi: GeneralizedMap, denom_floor: float = DENOM_FLOOR) -> float:
    """Supremum over ordered pairs ``y1 != y2`` of ``d(phi(y1), phi(y2)) / d(phi(y1), pi^-1(y2))``.

    Empty suprema (single base point, all pairs degenerate) give 1.
    """
    return global_constant_detail(phi, denom_floor).value


def _pick_value(entries):
    reliable = [e for e in entries if e.reliable]
    if reliable:
        e = reliable[-1]
        return e.sup, e.radius
    nonempty = [e for e in entries if e.count > 0]
    if nonempty:
        e = nonempty[-1]
        return e.sup, e.radius
    return 0.0, None


def _point_ratios(phi, z, idx, variant, denom_floor):
    model = phi.model
    vz = phi.values[z]
    vy = phi.values[idx]
    num = np.asarray(model.dist(vy, vz[None, :]), float)
    if variant == MOVING_TO_BASE:
        den = model.fiber_dist(vy, model.base[z][None, :])
    elif variant == BASE_TO_MOVING:
        den = model.fiber_dist(vz[None, :], model.base[idx])
    else:
        raise ValueError(f"unknown denominator variant {variant!r}")
    den = np.atleast_1d(np.asarray(den, float))
    valid = den >= denom_floor
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(valid, num / np.where(valid, den, 1.0), -np.inf)
    return ratio, valid


def local_ratios(phi, z: int, sched: ScaleSchedule, variant: str = MOVING_TO_BASE,
                 denom_floor: float = DENOM_FLOOR):
    """Neighbour indices in ``B(z, r0) \\ {z}``, their base distances and quotients."""
    model = phi.model
    idx = model.ball(z, sched.radii[0], punctured=True)
    dz = np.asarray(model.base_dist(model.base[idx], model.base[z][None, :]), float)
    ratio, valid = _point_ratios(phi, z, idx, variant, denom_floor)
    return idx, dz, ratio, valid


def slope_at(phi: GeneralizedMap, z, sched: ScaleSchedule | None = None,
             variant: str = MOVING_TO_BASE, denom_floor: float = DENOM_FLOOR) -> SlopeEstimate:
    """Local slope of ``phi`` at base point ``z``; 0 at isolated points."""
    sched = sched or ScaleSchedule.geometric()
    z = phi.model.resolve(z)
    idx, dz, ratio, valid = local_ratios(phi, z, sched, variant, denom_floor)
    entries = []
    for r in sched.radii:
        inside = dz <= r
        count = int(inside.sum())
        sup = float(ratio[inside].max()) if count and np.any(valid & inside) else 0.0
        entries.append(ScaleEntry(r, sup, count, count >= sched.min_samples))
    value, used = _pick_value(entries)
    return SlopeEstimate(entries, value, variant, isolated=used is None, scale_used=used,
                         skipped=int((~valid).sum()))


def asymptotic_slope_at(phi: GeneralizedMap, z, sched: ScaleSchedule | None = None,
                        variant: str = MOVING_TO_BASE,
                        denom_floor: float = DENOM_FLOOR) -> SlopeEstimate:
    """Per-scale sup over ordered pairs ``y1 != y2`` in the closed ball ``B(z, r)``.

    Sample counts (and hence reliability) are those of the punctured ball so
    that scales line up with :func:`slope_at`.  ``variant`` only labels the
    estimate: the pairwise quotient is always ``d(phi(y1), pi^-1(y2))``.
    """
    sched = sched or ScaleSchedule.geometric()
    model = phi.model
    z = model.resolve(z)
    idx = model.ball(z, sched.radii[0], punctured=False)
    dz = np.asarray(model.base_dist(model.base[idx], model.base[z][None, :]), float)
    ratio, valid = _ratio_matrix(model, phi.values, idx, idx, denom_floor)
    np.fill_diagonal(ratio, -np.inf)
    np.fill_diagonal(valid, True)
    entries = []
    for r in sched.radii:
        inside = dz <= r
        count = int(inside.sum()) - 1
        sub = ratio[np.ix_(inside, inside)]
        sup = float(sub.max()) if count > 0 and np.isfinite(sub.max()) else 0.0
        entries.append(ScaleEntry(r, sup, count, count >= sched.min_samples))
    value, used = _pick_value(entries)
    return SlopeEstimate(entries, value, variant, isolated=used is None, scale_used=used,
                         skipped=int((~valid).sum()))


def richardson(estimate: SlopeEstimate, order: float = 1.0) -> float:
    """Extrapolate the last two reliable scales to ``r -> 0`` assuming ``O(r^order)`` error."""
    rel = [e for e in estimate.per_scale if e.reliable]
    if len(rel) < 2:
        return estimate.value
    a, b = rel[-2], rel[-1]
    q = (a.radius / b.radius) ** order
    return (q * b.sup - a.sup) / (q - 1.0)


# relative intrinsic Lipschitz property with respect to another section


def cone_contains(psi: GeneralizedMap, xhat, L: float, x, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Whether ``x`` lies in the cone ``{d(x, psi(pi(x))) > L d(xhat, psi(pi(x)))}``."""
    model = psi.model
    x = np.asarray(x, float)
    j = model.index_of(model.project(x))
    anchor = psi.values[j]
    lhs = float(model.dist(x, anchor))
    rhs = L * float(model.dist(np.asarray(xhat, float), anchor))
    return not tol.leq(lhs, rhs)


def _agreement(phi, psi, yhat, tol):
    model = phi.model
    i = model.resolve(yhat)
    gap = float(model.dist(phi.values[i], psi.values[i]))
    if gap > 1e-9:
        raise PreconditionError(
            f"phi and psi differ at the common point ({gap!r})",
            witness={"y": model.base[i].tolist(), "gap": gap},
        )
    return i


def relative_ratios(phi, psi, yhat, tol: Tolerance = DEFAULT_TOL):
    """``d(phi(y), psi(y)) / d(psi(yhat), psi(y))`` for every base point with a valid denominator."""
    model = phi.model
    i = _agreement(phi, psi, yhat, tol)
    num = np.asarray(model.dist(phi.values, psi.values), float)
    den = np.asarray(model.dist(psi.values[i][None, :], psi.values), float)
    valid = den >= tol.denom_floor
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(valid, num / np.where(valid, den, 1.0), 0.0)
    return ratio, valid, num, den


def is_lipschitz_wrt(phi: GeneralizedMap, psi: GeneralizedMap, yhat, L: float,
                     tol: Tolerance = DEFAULT_TOL) -> bool:
    """Decide relative ``L``-Lipschitzness at the common point both ways and insist they agree.

    One route checks that no value of ``phi`` falls in the cone around ``psi``
    with vertex ``xhat = psi(yhat)``; the other checks
    ``d(phi(y), psi(y)) <= L d(psi(yhat), psi(y))`` for every ``y``.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    model = phi.model
    i = _agreement(phi, psi, yhat, tol)
    xhat = psi.values[i]
    by_cone = not any(cone_contains(psi, xhat, L, x, tol) for x in phi.values)
    _, _, num, den = relative_ratios(phi, psi, i, tol)
    by_inequality = all(tol.leq(float(a), L * float(b)) for a, b in zip(num, den))
    if by_cone != by_inequality:
        raise InternalConsistencyError(
            f"cone test says {by_cone}, inequality test says {by_inequality}"
        )
    return by_cone


def min_constant_wrt(phi: GeneralizedMap, psi: GeneralizedMap, yhat,
                     tol: Tolerance = DEFAULT_TOL) -> float:
    """Smallest ``L >= 1`` for which ``phi`` is relatively ``L``-Lipschitz to ``psi`` at ``yhat``.

    Returns ``inf`` if some ``y`` has ``phi(y) != psi(y)`` while ``psi(y) = psi(yhat)``.
    """
    ratio, valid, num, _ = relative_ratios(phi, psi, yhat, tol)
    if np.any(~valid & (num > tol.denom_floor)):
        return float("inf")
    return max(1.0, float(ratio.max()) if len(ratio) else 1.0)
