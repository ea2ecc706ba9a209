"""Sections of a quotient map and the pointwise algebra the slope formulas use.

A :class:`Section` is stored through its fiber parameters (heights,
signs, integer offsets, ...), so ``pi(phi(y)) = y`` holds by construction.
Anything produced by an operation that may leave the fibers (products,
squares, inverses, combinations on non-affine models) is a
:class:`GeneralizedMap`: a base-indexed table of ``X`` points.
"""

from __future__ import annotations

import numpy as np

from .quotient import QuotientModel


class SectionError(ValueError):
    pass


class PreconditionError(ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class GeneralizedMap:
    def __init__(self, model: QuotientModel, values, label: str = ""):
        self.model = model
        values = np.array(values, dtype=float)
        self.values = values.reshape(model.m, model.x_dim)
        self.values.setflags(write=False)
        self.label = label

    def __call__(self, y):
        return self.values[self.model.resolve(y)]

    def __repr__(self):
        return f"{type(self).__name__}({self.label or self.model.kind}, m={self.model.m})"

    @property
    def is_section(self) -> bool:
        return validate_section(self.model, self.values)

    def scalar(self) -> np.ndarray:
        _require_real(self.model)
        return self.values[:, 0]


class Section(GeneralizedMap):
    def __init__(self, model: QuotientModel, params, label: str = ""):
        params = np.array(params)
        if model.kind in ("circle", "explicit"):
            if not np.all(np.asarray(params, float) == np.round(np.asarray(params, float))):
                raise SectionError(f"{model.kind} section parameters must be integers")
            params = params.astype(int)
        elif model.kind == "abs-value":
            if not np.all(np.isin(params, (-1, 1))):
                raise SectionError("abs-value section parameters are signs +1/-1")
            params = params.astype(int)
        else:
            params = params.astype(float)
        if model.kind == "linear-projection":
            params = params.reshape(model.m, model.k)
        else:
            params = params.reshape(model.m)
        self.params = params
        self.params.setflags(write=False)
        super().__init__(model, model.lift(model.base, params), label)

    @classmethod
    def canonical(cls, model, label="canonical"):
        return cls(model, model.canonical_params(), label)


def evaluate(phi: GeneralizedMap, y) -> np.ndarray:
    """The ``X`` point assigned to base point ``y`` (coordinates or index)."""
    return phi(y)


def validate_section(model: QuotientModel, values, tol: float = 1e-9) -> bool:
    """True iff ``pi(values[i])`` lies within ``tol`` of base point ``i`` for every ``i``."""
    values = np.asarray(values, float)
    if model.m == 0:
        return True
    values = values.reshape(model.m, model.x_dim)
    if model.kind == "explicit":
        # membership in X itself, then the enumerated fiber
        d = model.dist(values[:, None, :], model.x_points[None, :, :])
        nearest = np.argmin(d, axis=1)
        on_x = d[np.arange(model.m), nearest] <= tol
        return bool(np.all(on_x & (model.proj[nearest] == np.arange(model.m))))
    gap = model.base_dist(model.project(values), model.base)
    return bool(np.all(gap <= tol))


class WeightFunction:
    """Base-indexed weights in ``[0, 1]``."""

    def __init__(self, model: QuotientModel, values, label: str = ""):
        v = np.broadcast_to(np.asarray(values, float), (model.m,)).copy()
        if np.any(~np.isfinite(v)) or v.min() < 0 or v.max() > 1:
            raise SectionError("weights must lie in [0, 1]")
        v.setflags(write=False)
        self.model = model
        self.values = v
        self.label = label

    @classmethod
    def constant(cls, model, t: float):
        return cls(model, np.full(model.m, float(t)), label=f"const {t}")

    def __call__(self, y):
        return float(self.values[self.model.resolve(y)])

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.values == self.values[0])) if len(self.values) else True

    def lipschitz_bound(self) -> float:
        """Smallest ``C`` with ``|f(y) - f(z)| <= C d(y, z)`` on the sample."""
        D = self.model.base_matrix()
        dv = np.abs(self.values[:, None] - self.values[None, :])
        ok = D > 0
        return float((dv[ok] / D[ok]).max()) if ok.any() else 0.0


def _same_model(phi, psi):
    if phi.model is not psi.model:
        raise SectionError("sections live on different models")


def _require_real(model):
    if not model.real_valued:
        raise SectionError(f"{model.kind} model is not real valued")


def _combine(weights_phi, weights_psi, phi, psi, label):
    model = phi.model
    a = np.asarray(weights_phi, float)
    b = np.asarray(weights_psi, float)
    if model.affine_fibers and isinstance(phi, Section) and isinstance(psi, Section):
        # combine fiber heights only: base coordinates stay exact
        if model.kind == "linear-projection":
            params = a[:, None] * phi.params + b[:, None] * psi.params
        else:
            params = a * phi.params + b * psi.params
        return Section(model, params, label)
    if not model.normed:
        raise SectionError(f"{model.kind} model has no vector structure to combine in")
    if model.kind == "abs-value":
        raise SectionError("combinations leave the fibers {y, -y} of the abs-value model")
    vals = a[:, None] * phi.values + b[:, None] * psi.values
    return GeneralizedMap(model, vals, label)


def convex_combine(f: WeightFunction, phi: GeneralizedMap, psi: GeneralizedMap):
    """Pointwise ``f phi + (1 - f) psi``."""
    _same_model(phi, psi)
    return _combine(f.values, 1.0 - f.values, phi, psi, "convex combination")


def affine_combine(alpha: float, beta: float, phi: GeneralizedMap, psi: GeneralizedMap):
    """Pointwise ``alpha phi + beta psi`` with ``alpha + beta = 1``."""
    if abs(alpha + beta - 1.0) > 1e-12:
        raise SectionError(f"alpha + beta must equal 1, got {alpha + beta!r}")
    _same_model(phi, psi)
    m = phi.model.m
    return _combine(np.full(m, float(alpha)), np.full(m, float(beta)), phi, psi,
                    "affine combination")


def pointwise_product(phi: GeneralizedMap, psi: GeneralizedMap) -> GeneralizedMap:
    _same_model(phi, psi)
    return GeneralizedMap(phi.model, (phi.scalar() * psi.scalar())[:, None], "product")


def pointwise_square(phi: GeneralizedMap) -> GeneralizedMap:
    v = phi.scalar()
    return GeneralizedMap(phi.model, (v * v)[:, None], "square")


def _select(mask, phi: Section, psi: Section, label):
    # the result takes one of the two fiber members at every base point
    if phi.params.ndim > 1:
        params = np.where(mask[:, None], phi.params, psi.params)
    else:
        params = np.where(mask, phi.params, psi.params)
    return Section(phi.model, params, label)


def pointwise_max(phi: Section, psi: Section) -> Section:
    _same_model(phi, psi)
    return _select(phi.scalar() >= psi.scalar(), phi, psi, "max")


def pointwise_min(phi: Section, psi: Section) -> Section:
    _same_model(phi, psi)
    return _select(phi.scalar() <= psi.scalar(), phi, psi, "min")


def negate(phi: Section) -> Section:
    """``-phi`` when it is again a section of the same model."""
    model = phi.model
    _require_real(model)
    if model.kind == "abs-value":
        return Section(model, -phi.params, "negation")
    if model.kind == "explicit":
        target = -phi.values
        d = model.dist(target[:, None, :], model.x_points[None, :, :])
        idx = np.argmin(d, axis=1)
        if np.all(d[np.arange(model.m), idx] == 0) and np.all(model.proj[idx] == np.arange(model.m)):
            return Section(model, idx, "negation")
    raise SectionError(f"-phi is not a section of this {model.kind} model")


def pointwise_inverse(phi: GeneralizedMap, eps: float) -> GeneralizedMap:
    """``1 / phi``, requiring ``phi >= eps > 0`` everywhere."""
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    v = phi.scalar()
    bad = np.flatnonzero(v < eps)
    if len(bad):
        i = int(bad[0])
        y = phi.model.base[i].tolist()
        raise PreconditionError(
            f"phi({y}) = {v[i]!r} < eps = {eps!r}", witness={"y": y, "value": float(v[i])}
        )
    return GeneralizedMap(phi.model, (1.0 / v)[:, None], "inverse")


def sup_norm(phi: GeneralizedMap) -> float:
    if phi.model.m == 0:
        return 0.0
    return float(np.max(phi.model.norm(phi.values)))
