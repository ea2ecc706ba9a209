"""Finite metric spaces, balls, and the Heisenberg group with its Korányi gauge."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

DENOM_FLOOR = 1e-12


class FiberDivergenceError(RuntimeError):
    """Raised when a 1D fiber minimization cannot bracket its minimum."""


@dataclass(frozen=True)
class Violation:
    kind: str  # "identity" | "nonnegativity" | "symmetry" | "triangle"
    points: tuple
    amount: float


@dataclass
class AxiomReport:
    violations: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid


class MetricSpace:
    """A finite metric space stored as a labelled distance matrix.

    Build it from coordinates and a metric with :meth:`from_points`, or from a
    raw (possibly defective) table with :meth:`from_table`.
    """

    def __init__(self, labels: Sequence, matrix, tol: float = 1e-9):
        self.labels = list(labels)
        self.matrix = np.asarray(matrix, dtype=float)
        if self.matrix.shape != (len(self.labels), len(self.labels)):
            raise ValueError("distance matrix shape does not match labels")
        self.tol = tol

    @classmethod
    def from_points(cls, points, metric: Callable, labels=None, tol: float = 1e-9):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        n = len(pts)
        mat = metric(pts[:, None, :], pts[None, :, :])
        mat = np.broadcast_to(np.asarray(mat, dtype=float), (n, n))
        if labels is None:
            labels = [tuple(p) if len(p) > 1 else float(p[0]) for p in pts]
        return cls(labels, mat, tol)

    @classmethod
    def from_table(cls, table: dict, tol: float = 1e-9):
        """``table`` maps ``(a, b)`` to ``dist(a, b)``; missing diagonal entries are 0."""
        labels = []
        for a, b in table:
            for p in (a, b):
                if p not in labels:
                    labels.append(p)
        idx = {p: i for i, p in enumerate(labels)}
        mat = np.full((len(labels), len(labels)), np.nan)
        np.fill_diagonal(mat, 0.0)
        for (a, b), v in table.items():
            mat[idx[a], idx[b]] = v
        # an unspecified direction is taken from its mirror
        mat = np.where(np.isnan(mat), mat.T, mat)
        return cls(labels, mat, tol)

    def __len__(self):
        return len(self.labels)

    def dist(self, i: int, j: int) -> float:
        return float(self.matrix[i, j])


def validate_metric(space: MetricSpace, tol: float | None = None) -> AxiomReport:
    """Report every identity, symmetry and triangle violation larger than ``tol``."""
    tol = space.tol if tol is None else tol
    d = space.matrix
    n = len(space)
    lab = space.labels
    report = AxiomReport()
    for i in np.flatnonzero(np.abs(np.diag(d)) > tol):
        report.violations.append(Violation("identity", (lab[i],), float(abs(d[i, i]))))
    for i, j in zip(*np.nonzero(d < -tol)):
        report.violations.append(Violation("nonnegativity", (lab[i], lab[j]), float(-d[i, j])))
    asym = np.abs(d - d.T)
    for i, j in zip(*np.nonzero(np.triu(asym > tol, 1))):
        report.violations.append(Violation("symmetry", (lab[i], lab[j]), float(asym[i, j])))
    # d(p, r) <= d(p, q) + d(q, r), one middle point q at a time to bound memory
    for q in range(n):
        excess = d - (d[:, q][:, None] + d[q, :][None, :])
        for p, r in zip(*np.nonzero(excess > tol)):
            report.violations.append(
                Violation("triangle", (lab[p], lab[q], lab[r]), float(excess[p, r]))
            )
    return report


def ball(space: MetricSpace, center: int, r: float, punctured: bool = False) -> list:
    """Labels of all points within distance ``r`` of ``space.labels[center]``."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    row = space.matrix[center]
    mask = row <= r
    if punctured:
        mask[center] = False
    return [space.labels[i] for i in np.flatnonzero(mask)]


def lp_norm(v, p: float, axis: int = -1):
    v = np.abs(np.asarray(v, dtype=float))
    if np.isinf(p):
        return v.max(axis=axis)
    if p == 1:
        return v.sum(axis=axis)
    if p == 2:
        return np.sqrt((v * v).sum(axis=axis))
    return (v**p).sum(axis=axis) ** (1.0 / p)


# Heisenberg group H^1 in exponential coordinates (x, y, t)

KORANYI_FACTOR = 16.0


class KoranyiPoint(NamedTuple):
    x: float
    y: float
    t: float

    def __mul__(self, other: "KoranyiPoint") -> "KoranyiPoint":
        return KoranyiPoint(*heis_mul(self, other))

    def inverse(self) -> "KoranyiPoint":
        return KoranyiPoint(-self.x, -self.y, -self.t)


def heis_mul(p, q):
    """Group law (x,y,t)(x',y',t') = (x+x', y+y', t+t'+(xy'-yx')/2), broadcasting."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    x, y, t = p[..., 0], p[..., 1], p[..., 2]
    a, b, s = q[..., 0], q[..., 1], q[..., 2]
    return np.stack([x + a, y + b, t + s + 0.5 * (x * b - y * a)], axis=-1)


def heis_inv(p):
    return -np.asarray(p, dtype=float)


def koranyi_gauge(p, factor: float = KORANYI_FACTOR):
    p = np.asarray(p, dtype=float)
    r2 = p[..., 0] ** 2 + p[..., 1] ** 2
    return (r2 * r2 + factor * p[..., 2] ** 2) ** 0.25


def koranyi_distance(p, q, factor: float = KORANYI_FACTOR):
    """Left-invariant distance ``||q^{-1} p||_K``; broadcasts over leading axes."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    dx = p[..., 0] - q[..., 0]
    dy = p[..., 1] - q[..., 1]
    # t-coordinate of q^{-1} p
    dt = p[..., 2] - q[..., 2] + 0.5 * (q[..., 1] * p[..., 0] - q[..., 0] * p[..., 1])
    r2 = dx * dx + dy * dy
    out = (r2 * r2 + factor * dt * dt) ** 0.25
    return float(out) if np.ndim(out) == 0 else out


def ternary_minimize(func, lo, hi, iterations: int = 200, xtol: float = 1e-8):
    """Vectorized ternary search for unimodal ``func`` on ``[lo, hi]``.

    Returns ``(argmin, minimum)``.  Raises FiberDivergenceError when the
    minimizer ends up pinned to an end of the bracket, i.e. the bracket did
    not contain the minimum.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    lo0, hi0 = lo.copy(), hi.copy()
    for _ in range(iterations):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        left = func(m1) <= func(m2)
        hi = np.where(left, m2, hi)
        lo = np.where(left, lo, m1)
        if np.all(hi - lo <= xtol * 1e-6):
            break
    # local refinement: best of the final bracket's endpoints and midpoint
    cand = np.stack([lo, 0.5 * (lo + hi), hi])
    vals = np.stack([func(c) for c in cand])
    k = np.argmin(vals, axis=0)
    s = np.take_along_axis(cand, k[None], 0)[0]
    v = np.take_along_axis(vals, k[None], 0)[0]
    width = hi0 - lo0
    pinned = (np.abs(s - lo0) <= xtol * np.maximum(1.0, width)) | (
        np.abs(hi0 - s) <= xtol * np.maximum(1.0, width)
    )
    if np.any(pinned & (width > 0)):
        raise FiberDivergenceError("fiber minimizer failed to bracket the minimum")
    return s, v
