"""Quotient maps ``pi: X -> Y`` sampled over a finite base, with fiber distances.

Every model stores its base sample as an ``(m, dY)`` array and knows how to

* measure distances in ``X`` (:meth:`QuotientModel.dist`) and ``Y``
  (:meth:`QuotientModel.base_dist`),
* project ``X`` points to base coordinates,
* lift a base point plus a fiber parameter to the point of ``X`` it names,
* compute ``d(x, pi^{-1}(y))`` (:meth:`QuotientModel.fiber_dist`).

All distance methods broadcast over leading axes.
"""

from __future__ import annotations

import numpy as np

from .metric import (
    DENOM_FLOOR,
    KORANYI_FACTOR,
    MetricSpace,
    koranyi_distance,
    lp_norm,
    ternary_minimize,
)


class UnknownBasePoint(KeyError):
    pass


class RatioUndefined(ValueError):
    pass


class QuotientModel:
    kind: str = "abstract"
    real_valued: bool = False
    normed: bool = False  # X is a normed vector space
    affine_fibers: bool = False  # fibers are affine subspaces: convex combinations stay sections
    open_by_construction: bool = True
    fiber_oracle: str = "closed-form"

    def __init__(self, base, grid_spec=None):
        base = np.asarray(base, dtype=float)
        if base.ndim == 1:
            base = base[:, None]
        self.base = base
        self.base.setflags(write=False)
        self.grid_spec = grid_spec

    # shape info
    @property
    def m(self) -> int:
        return len(self.base)

    @property
    def base_dim(self) -> int:
        return self.base.shape[1]

    x_dim: int = 1

    # to be provided by subclasses
    def dist(self, a, b):
        raise NotImplementedError

    def base_dist(self, a, b):
        raise NotImplementedError

    def project(self, x):
        raise NotImplementedError

    def lift(self, y, params):
        raise NotImplementedError

    def fiber_dist(self, x, y):
        raise NotImplementedError

    def canonical_params(self):
        raise NotImplementedError

    def params_spec(self) -> dict:
        return {}

    def norm(self, v):
        return np.abs(np.asarray(v, dtype=float))[..., 0]

    # shared helpers
    def index_of(self, y, tol: float = 1e-9) -> int:
        """Index of the base point at (or within ``tol`` of) ``y``."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if y.shape != (self.base_dim,):
            raise UnknownBasePoint(f"base point {y.tolist()} has the wrong dimension")
        d = self.base_dist(self.base, y[None, :])
        i = int(np.argmin(d))
        if d[i] > tol:
            raise UnknownBasePoint(f"{y.tolist()} is not a base point")
        return i

    def resolve(self, y) -> int:
        """Accept either a base index (``int``) or base coordinates."""
        if isinstance(y, (int, np.integer)) and not isinstance(y, bool):
            if not 0 <= y < self.m:
                raise UnknownBasePoint(f"base index {y} out of range")
            return int(y)
        return self.index_of(y)

    def base_matrix(self):
        return self.base_dist(self.base[:, None, :], self.base[None, :, :])

    def base_space(self, tol: float = 1e-9) -> MetricSpace:
        return MetricSpace.from_points(self.base, self.base_dist, tol=tol)

    def x_space(self, points, tol: float = 1e-9) -> MetricSpace:
        return MetricSpace.from_points(points, self.dist, tol=tol)

    def ball(self, center: int, r: float, punctured: bool = False) -> np.ndarray:
        if r < 0:
            raise ValueError("radius must be nonnegative")
        d = self.base_dist(self.base, self.base[center][None, :])
        mask = d <= r
        if punctured:
            mask[center] = False
        return np.flatnonzero(mask)

    def spec(self) -> dict:
        """JSON-compatible description, the ``model`` entry of a model file."""
        if self.grid_spec is not None:
            grid = self.grid_spec.to_dict()
        else:
            grid = {"points": self.base.tolist()}
        return {"kind": self.kind, "params": self.params_spec(), "grid": grid}

    def with_base(self, base, grid_spec=None):
        """Same quotient over a different base sample."""
        raise NotImplementedError


class LinearProjectionModel(QuotientModel):
    """``R^n`` with the l^p norm, projected onto its first ``n - k`` coordinates."""

    kind = "linear-projection"
    normed = True
    affine_fibers = True

    def __init__(self, n: int, k: int, p: float, base, grid_spec=None):
        if not (1 <= k < n):
            raise ValueError(f"need 1 <= k < n, got n={n}, k={k}")
        if not (p >= 1):
            raise ValueError("norm exponent must be in [1, inf]")
        super().__init__(base, grid_spec)
        if self.base_dim != n - k:
            raise ValueError(f"base points must have {n - k} coordinates")
        self.n, self.k, self.p = n, k, float(p)
        self.x_dim = n
        self.real_valued = n == 1

    def params_spec(self):
        p = "inf" if np.isinf(self.p) else self.p
        return {"n": self.n, "k": self.k, "p": p}

    def with_base(self, base, grid_spec=None):
        return LinearProjectionModel(self.n, self.k, self.p, base, grid_spec)

    def dist(self, a, b):
        return lp_norm(np.asarray(a, float) - np.asarray(b, float), self.p)

    def base_dist(self, a, b):
        return lp_norm(np.asarray(a, float) - np.asarray(b, float), self.p)

    def norm(self, v):
        return lp_norm(v, self.p)

    def project(self, x):
        return np.asarray(x, float)[..., : self.n - self.k]

    def lift(self, y, params):
        params = np.asarray(params, float).reshape(len(y), self.k)
        return np.concatenate([np.asarray(y, float), params], axis=-1)

    def fiber_dist(self, x, y):
        # free coordinates are matched exactly, leaving the base-coordinate gap
        return lp_norm(np.asarray(x, float)[..., : self.n - self.k] - np.asarray(y, float), self.p)

    def canonical_params(self):
        return np.zeros((self.m, self.k))


class AbsValueModel(QuotientModel):
    """``X = {eps <= |x| <= R}``, ``Y = [eps, R]``, ``pi = |.|``; fibers ``{y, -y}``."""

    kind = "abs-value"
    real_valued = True
    normed = True

    def __init__(self, eps: float, R: float, base, grid_spec=None):
        if eps < 0 or eps > R:
            raise ValueError("need 0 <= eps <= R")
        super().__init__(base, grid_spec)
        if self.base_dim != 1:
            raise ValueError("abs-value base is one dimensional")
        if self.base.min() < eps - 1e-12 or self.base.max() > R + 1e-12:
            raise ValueError(f"base points must lie in [{eps}, {R}]")
        self.eps, self.R = float(eps), float(R)

    def params_spec(self):
        return {"eps": self.eps, "R": self.R}

    def with_base(self, base, grid_spec=None):
        return AbsValueModel(self.eps, self.R, base, grid_spec)

    def dist(self, a, b):
        return np.abs(np.asarray(a, float) - np.asarray(b, float))[..., 0]

    def base_dist(self, a, b):
        return np.abs(np.asarray(a, float) - np.asarray(b, float))[..., 0]

    def project(self, x):
        return np.abs(np.asarray(x, float))

    def lift(self, y, params):
        s = np.asarray(params, float).reshape(len(y), 1)
        return s * np.asarray(y, float)

    def fiber_dist(self, x, y):
        x = np.asarray(x, float)[..., 0]
        y = np.asarray(y, float)[..., 0]
        return np.minimum(np.abs(x - y), np.abs(x + y))

    def canonical_params(self):
        return np.ones(self.m)


def _flatten_pair(x, y, dx, dy):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    shape = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
    xf = np.broadcast_to(x, shape + (dx,)).reshape(-1, dx)
    yf = np.broadcast_to(y, shape + (dy,)).reshape(-1, dy)
    return xf, yf, shape


def _circle_gap(a, b):
    r = np.mod(np.asarray(a, float) - np.asarray(b, float), 1.0)
    return np.minimum(r, 1.0 - r)


class CircleModel(QuotientModel):
    """``R -> R/Z``; a section picks an integer offset ``k(y)`` per base point."""

    kind = "circle"
    real_valued = True
    normed = True

    def __init__(self, base, grid_spec=None):
        super().__init__(base, grid_spec)
        if self.base_dim != 1:
            raise ValueError("circle base is one dimensional")
        if self.base.min() < 0 or self.base.max() >= 1:
            raise ValueError("circle base points must lie in [0, 1)")

    def with_base(self, base, grid_spec=None):
        return CircleModel(base, grid_spec)

    def dist(self, a, b):
        return np.abs(np.asarray(a, float) - np.asarray(b, float))[..., 0]

    def base_dist(self, a, b):
        return _circle_gap(a, b)[..., 0]

    def project(self, x):
        return np.mod(np.asarray(x, float), 1.0)

    def lift(self, y, params):
        k = np.asarray(params, float).reshape(len(y), 1)
        return np.asarray(y, float) + k

    def fiber_dist(self, x, y):
        return _circle_gap(np.asarray(x, float)[..., 0], np.asarray(y, float)[..., 0])

    def canonical_params(self):
        return np.zeros(self.m, dtype=int)


class HeisenbergModel(QuotientModel):
    """``H^1 -> R^2``, ``(x, y, t) -> (x, y)``; fibers are the vertical cosets.

    The fiber distance is found by 1D minimization of the Korányi distance
    along the fiber (``oracle="ternary"``).  ``oracle="closed-form"`` uses
    the exact minimizer instead and exists for cross-checking.
    """

    kind = "heisenberg"

    def __init__(self, base, grid_spec=None, factor: float = KORANYI_FACTOR,
                 oracle: str = "ternary", iterations: int = 200):
        super().__init__(base, grid_spec)
        if self.base_dim != 2:
            raise ValueError("heisenberg base is two dimensional")
        if oracle not in ("ternary", "closed-form"):
            raise ValueError(f"unknown fiber oracle {oracle!r}")
        self.factor = float(factor)
        self.oracle = oracle
        self.fiber_oracle = "1D-minimization" if oracle == "ternary" else "closed-form"
        self.iterations = iterations
        self.x_dim = 3

    def params_spec(self):
        out = {}
        if self.factor != KORANYI_FACTOR:
            out["factor"] = self.factor
        if self.oracle != "ternary":
            out["oracle"] = self.oracle
        return out

    def with_base(self, base, grid_spec=None):
        return HeisenbergModel(base, grid_spec, self.factor, self.oracle, self.iterations)

    def dist(self, a, b):
        return koranyi_distance(a, b, self.factor)

    def base_dist(self, a, b):
        return lp_norm(np.asarray(a, float) - np.asarray(b, float), 2)

    def norm(self, v):
        from .metric import koranyi_gauge

        return koranyi_gauge(v, self.factor)

    def project(self, x):
        return np.asarray(x, float)[..., :2]

    def lift(self, y, params):
        u = np.asarray(params, float).reshape(len(y), 1)
        return np.concatenate([np.asarray(y, float), u], axis=-1)

    def fiber_dist(self, x, y):
        xf, yf, shape = _flatten_pair(x, y, 3, 2)

        def along_fiber(s):
            return koranyi_distance(xf, np.column_stack([yf, s]), self.factor)

        if self.oracle == "closed-form":
            dxy = lp_norm(xf[:, :2] - yf, 2)
            out = dxy
        else:
            t = xf[:, 2]
            d0 = np.atleast_1d(along_fiber(t))
            # gauge >= sqrt(factor)^(1/2) |tau|^(1/2) bounds how far the minimizer can sit from t
            B = d0**2 / np.sqrt(self.factor) + 1.0
            _, out = ternary_minimize(along_fiber, t - B, t + B, self.iterations)
            # the starting height is a fiber point too; keeps d(p, pi^-1(pi(p))) exactly 0
            out = np.minimum(out, d0)
        out = np.asarray(out, float).reshape(shape)
        return float(out) if out.ndim == 0 else out

    def canonical_params(self):
        return np.zeros(self.m)


class ExplicitModel(QuotientModel):
    """A finite ``X`` (coordinates in R^d, l^p metric) with an enumerated projection.

    ``proj[i]`` is the base index of ``x_points[i]``; fibers are read off
    the enumeration and fiber distances are minima over fiber members.
    Openness cannot be certified on a finite sample: ``open`` is the
    caller's assertion.
    """

    kind = "explicit"
    fiber_oracle = "enumerated"

    def __init__(self, x_points, proj, base, p: float = 2, open: bool = True, grid_spec=None):
        super().__init__(base, grid_spec)
        xp = np.asarray(x_points, float)
        if xp.ndim == 1:
            xp = xp[:, None]
        self.x_points = xp
        self.proj = np.asarray(proj, dtype=int)
        if self.proj.shape != (len(xp),):
            raise ValueError("proj must give one base index per X point")
        if self.proj.min() < 0 or self.proj.max() >= self.m:
            raise ValueError("proj refers to a missing base point")
        if len(np.unique(self.proj)) != self.m:
            raise ValueError("projection is not surjective onto the base sample")
        self.p = float(p)
        self.open_by_construction = bool(open)
        self.x_dim = xp.shape[1]
        self.real_valued = self.x_dim == 1
        self.normed = self.real_valued
        self.fibers = [np.flatnonzero(self.proj == j) for j in range(self.m)]

    def params_spec(self):
        return {
            "x_points": self.x_points.tolist(),
            "proj": self.proj.tolist(),
            "p": self.p,
            "open": self.open_by_construction,
        }

    def with_base(self, base, grid_spec=None, keep=None):
        """Restrict to the base indices ``keep`` (``base`` must equal ``self.base[keep]``)."""
        if keep is None:
            raise ValueError("explicit models are restricted by index, pass keep=")
        keep = np.asarray(keep, int)
        remap = -np.ones(self.m, int)
        remap[keep] = np.arange(len(keep))
        xs = np.flatnonzero(np.isin(self.proj, keep))
        return ExplicitModel(self.x_points[xs], remap[self.proj[xs]], self.base[keep],
                             self.p, self.open_by_construction, grid_spec)

    def dist(self, a, b):
        return lp_norm(np.asarray(a, float) - np.asarray(b, float), self.p)

    def base_dist(self, a, b):
        return lp_norm(np.asarray(a, float) - np.asarray(b, float), 2)

    def norm(self, v):
        return lp_norm(v, self.p)

    def project(self, x):
        x = np.asarray(x, float)
        flat = x.reshape(-1, self.x_dim)
        d = self.dist(flat[:, None, :], self.x_points[None, :, :])
        i = np.argmin(d, axis=1)
        return self.base[self.proj[i]].reshape(x.shape[:-1] + (self.base_dim,))

    def lift(self, y, params):
        return self.x_points[np.asarray(params, int).reshape(len(y))]

    def fiber_dist(self, x, y):
        xf, yf, shape = _flatten_pair(x, y, self.x_dim, self.base_dim)
        out = np.empty(len(xf))
        idx = self._base_indices(yf)
        for j in np.unique(idx):
            rows = idx == j
            members = self.x_points[self.fibers[j]]
            out[rows] = self.dist(xf[rows][:, None, :], members[None, :, :]).min(axis=1)
        out = out.reshape(shape)
        return float(out) if out.ndim == 0 else out

    def _base_indices(self, yf):
        d = self.base_dist(yf[:, None, :], self.base[None, :, :])
        i = np.argmin(d, axis=1)
        if np.any(d[np.arange(len(i)), i] > 1e-9):
            raise UnknownBasePoint("fiber requested over a point outside the base sample")
        return i

    def canonical_params(self):
        return np.array([f[0] for f in self.fibers], dtype=int)


def fiber_distance(model: QuotientModel, x, y) -> float:
    """``d(x, pi^{-1}(y))`` for a base point ``y`` (coordinates) of ``model``."""
    i = model.index_of(y)
    return float(model.fiber_dist(np.asarray(x, float), model.base[i]))


def fiber_ratio_bound(section, denom_floor: float = DENOM_FLOOR):
    """Largest ratio of fiber distances ``d(phi(z1), pi^-1(y)) / d(phi(z2), pi^-1(y))``.

    The supremum runs over all base triples whose denominator is at least
    ``denom_floor``.  Returns ``(ell, skipped)`` where ``skipped`` counts the
    triples dropped for a degenerate denominator.
    """
    model = section.model
    vals = section.values
    m = model.m
    # F[z, y] = d(phi(z), pi^-1(y))
    F = model.fiber_dist(vals[:, None, :], model.base[None, :, :])
    ell = -np.inf
    skipped = 0
    for y in range(m):
        col = F[:, y]
        ok = col >= denom_floor
        skipped += int((~ok).sum()) * m
        if ok.any():
            ell = max(ell, float(col.max() / col[ok].min()))
    if not np.isfinite(ell) or ell < 0:
        raise RatioUndefined("ratio undefined: every fiber-distance denominator is degenerate")
    return ell, skipped
