"""Built-in quotient models, base grids and seeded random sections.

Randomness always comes from :func:`make_rng`, a Philox-4x64 counter-based
generator keyed by ``(seed, stream)``, so a seed means the same thing on
every platform and in every worker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quotient import (
    AbsValueModel,
    CircleModel,
    ExplicitModel,
    HeisenbergModel,
    LinearProjectionModel,
)
from .sections import Section

MAX_BASE_POINTS = 4096


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    key = np.array([int(seed) & (2**64 - 1), int(stream) & (2**64 - 1)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid: one ``(lo, hi, step)`` per axis, plus optional local refinement.

    ``refine`` is ``(center, radius, factor)``: points of a grid ``factor``
    times finer are added inside ``B(center, radius)`` (max-norm box).
    """

    axes: tuple
    refine: tuple | None = None
    max_points: int = MAX_BASE_POINTS

    def __post_init__(self):
        axes = tuple(tuple(float(v) for v in ax) for ax in self.axes)
        for lo, hi, step in axes:
            if not lo < hi:
                raise ValueError(f"grid axis needs lo < hi, got ({lo}, {hi})")
            if not step > 0:
                raise ValueError("grid step must be positive")
        object.__setattr__(self, "axes", axes)
        if self.count > self.max_points:
            raise ValueError(f"grid has {self.count} points, more than {self.max_points}")

    @staticmethod
    def _axis(lo, hi, step):
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return lo + step * np.arange(n)

    @property
    def count(self) -> int:
        return len(self.points())

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*[self._axis(*ax) for ax in self.axes], indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=-1)
        if self.refine is not None:
            center, radius, factor = self.refine
            center = np.atleast_1d(np.asarray(center, float))
            fine_axes = []
            for (lo, hi, step), c in zip(self.axes, center):
                fs = step / factor
                a = max(lo, c - radius)
                b = min(hi, c + radius)
                k0 = math.ceil((a - lo) / fs - 1e-9)
                k1 = math.floor((b - lo) / fs + 1e-9)
                fine_axes.append(lo + fs * np.arange(k0, k1 + 1))
            fmesh = np.meshgrid(*fine_axes, indexing="ij")
            fine = np.stack([g.ravel() for g in fmesh], axis=-1)
            pts = np.unique(np.round(np.concatenate([pts, fine]), 12), axis=0)
        return pts

    def to_dict(self) -> dict:
        d = {"axes": [list(ax) for ax in self.axes]}
        if self.refine is not None:
            c, r, f = self.refine
            d["refine"] = {"at": list(np.atleast_1d(c).astype(float)), "radius": r, "factor": f}
        return d

    @classmethod
    def from_dict(cls, d: dict, max_points: int = MAX_BASE_POINTS):
        refine = None
        if "refine" in d:
            rf = d["refine"]
            refine = (tuple(rf["at"]), float(rf["radius"]), int(rf.get("factor", 16)))
        return cls(tuple(tuple(ax) for ax in d["axes"]), refine, max_points)

    def refined(self, center, radius: float, factor: int = 16) -> "GridSpec":
        return GridSpec(self.axes, (tuple(np.atleast_1d(center).tolist()), radius, factor),
                        self.max_points)


def _grid(grid) -> tuple:
    if isinstance(grid, GridSpec):
        return grid.points(), grid
    return np.asarray(grid, float), None


def make_linear_projection_model(n: int, k: int, p: float, grid) -> LinearProjectionModel:
    """``R^n`` (l^p) over a grid in ``R^(n-k)``; drops the last ``k`` coordinates."""
    base, spec = _grid(grid)
    return LinearProjectionModel(n, k, p, base, spec)


def make_abs_value_model(eps: float, R: float, grid) -> AbsValueModel:
    if eps > R:
        raise ValueError("need eps <= R")
    base, spec = _grid(grid)
    return AbsValueModel(eps, R, base, spec)


def make_circle_model(grid) -> CircleModel:
    base, spec = _grid(grid)
    return CircleModel(base, spec)


def make_heisenberg_model(grid, factor: float = 16.0, oracle: str = "ternary") -> HeisenbergModel:
    base, spec = _grid(grid)
    return HeisenbergModel(base, spec, factor=factor, oracle=oracle)


def make_explicit_model(x_points, proj, base, p: float = 2, open: bool = True) -> ExplicitModel:
    return ExplicitModel(x_points, proj, base, p=p, open=open)


def _fourier_field(rng, base, amplitude, terms=4):
    # smooth random field: a short random Fourier series over the base coordinates
    dim = base.shape[1]
    span = np.ptp(base, axis=0)
    span = np.where(span > 0, span, 1.0)
    out = np.zeros(len(base))
    for j in range(1, terms + 1):
        w = rng.normal(size=dim) * (2 * np.pi * j / span)
        phase = rng.uniform(0, 2 * np.pi)
        a = rng.normal() / j
        out += a * np.cos(base @ w + phase)
    return amplitude * out


def random_params(model, roughness: float, rng: np.random.Generator):
    if roughness < 0:
        raise ValueError("roughness must be nonnegative")
    m = model.m
    if roughness == 0:
        return model.canonical_params()
    if model.kind == "linear-projection":
        return np.column_stack([_fourier_field(rng, model.base, roughness) for _ in range(model.k)])
    if model.kind == "heisenberg":
        return _fourier_field(rng, model.base, roughness)
    if model.kind == "abs-value":
        order = np.argsort(model.base[:, 0], kind="stable")
        flips = rng.random(m) < min(1.0, 0.1 * roughness)
        signs = np.where(np.cumsum(flips) % 2 == 0, 1, -1)
        out = np.empty(m, dtype=int)
        out[order] = signs
        return out
    if model.kind == "circle":
        K = math.ceil(roughness)
        return rng.integers(-K, K + 1, size=m)
    if model.kind == "explicit":
        return np.array([f[rng.integers(len(f))] for f in model.fibers], dtype=int)
    raise ValueError(f"no random sections for {model.kind}")


def random_section(model, roughness: float, seed: int, stream: int = 0) -> Section:
    """Deterministic random section: same ``(seed, stream)``, same section."""
    return Section(model, random_params(model, roughness, make_rng(seed, stream)),
                   label=f"random(seed={seed})")


def random_explicit_model(rng: np.random.Generator, n_base: int = 4, max_fiber: int = 3,
                          spread: float = 2.0) -> ExplicitModel:
    """A small real-valued enumerated quotient with random fibers."""
    base = np.sort(rng.choice(np.arange(1, 40), size=n_base, replace=False)).astype(float) / 10
    xs, proj = [], []
    for j in range(n_base):
        for _ in range(int(rng.integers(1, max_fiber + 1))):
            xs.append(float(np.round(rng.uniform(-spread, spread), 3)))
            proj.append(j)
    # drop accidental duplicates that would sit in two fibers
    seen = {}
    keep_x, keep_p = [], []
    for x, p in zip(xs, proj):
        if x in seen:
            continue
        seen[x] = p
        keep_x.append(x)
        keep_p.append(p)
    missing = set(range(n_base)) - set(keep_p)
    for j in sorted(missing):
        x = float(base[j] + 10.0)
        keep_x.append(x)
        keep_p.append(j)
    return ExplicitModel(np.array(keep_x)[:, None], keep_p, base[:, None])
