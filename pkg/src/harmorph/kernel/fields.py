"""Points and jet-evaluable fields on a single coordinate chart."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import ConfigError, DomainError, ShapeError
from . import jets
from .jets import Jet


@dataclass(frozen=True)
class Point:
    chart_id: str
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ShapeError(f"point coordinates must be a finite vector, got {self.coords!r}")
        object.__setattr__(self, "coords", c)

    def __len__(self):
        return self.coords.shape[0]


def coords_of(p) -> np.ndarray:
    """Coordinates of a :class:`Point` or any array-like."""
    if isinstance(p, Point):
        return p.coords
    c = np.asarray(p, dtype=float)
    if c.ndim != 1:
        raise ShapeError(f"expected a coordinate vector, got shape {c.shape}")
    return c


def _always(x, margin=0.0):
    return True


@dataclass(frozen=True, eq=False)
class Field:
    """A tensor field given by a component function on a ``dim``-chart.

    ``fn`` receives the coordinate vector (an ndarray, or a vector :class:`Jet`)
    and returns a scalar, vector or matrix built from the helpers in
    :mod:`harmorph.kernel.jets`.  ``domain`` is a predicate ``(x, margin) -> bool``.
    """

    dim: int
    fn: Callable
    name: str = ""
    domain: Callable = field(default=_always, repr=False)

    shape: tuple = ()

    def check_point(self, p, margin=0.0):
        x = coords_of(p)
        if x.shape[0] != self.dim:
            raise ShapeError(f"{self.name or type(self).__name__}: point has {x.shape[0]} coords, chart has {self.dim}")
        if not np.all(np.isfinite(x)) or not self.domain(x, margin):
            raise DomainError(f"{self.name or type(self).__name__}: {list(x)} outside domain")
        return x

    def __call__(self, p):
        x = self.check_point(p)
        return np.asarray(jets.value_of(jets.array(self.fn(x))), dtype=float)

    def jet(self, p, order=2) -> Jet:
        if order not in (0, 1, 2, 3):
            raise ConfigError(f"jet order must be in 0..3, got {order}")
        x = self.check_point(p)
        out = jets.as_jet(self.fn(Jet.variable(x, order)), self.dim, order)
        if out.shape != self.expected_shape:
            raise ShapeError(f"{self.name}: component shape {out.shape}, expected {self.expected_shape}")
        return out

    @property
    def expected_shape(self):
        return self.shape


@dataclass(frozen=True, eq=False)
class ScalarField(Field):
    pass


@dataclass(frozen=True, eq=False)
class VectorField(Field):
    @property
    def expected_shape(self):
        return (self.dim,)


@dataclass(frozen=True, eq=False)
class OneFormField(Field):
    @property
    def expected_shape(self):
        return (self.dim,)


@dataclass(frozen=True, eq=False)
class SymmetricTensorField(Field):
    """Covariant symmetric 2-tensor (not necessarily definite)."""

    @property
    def expected_shape(self):
        return (self.dim, self.dim)


@dataclass(frozen=True, eq=False)
class MetricField(SymmetricTensorField):
    constant_curvature: Optional[float] = None

    def matrix(self, p):
        return self(p)

    def is_positive_definite(self, p):
        try:
            np.linalg.cholesky(self(p))
        except np.linalg.LinAlgError:
            return False
        return True


def jet_evaluate(f: Field, p, order: int) -> Jet:
    """Taylor jet of a field's components at ``p``; ``order`` must be 1, 2 or 3."""
    if order not in (1, 2, 3):
        raise ConfigError(f"jet order must be 1, 2 or 3, got {order}")
    return f.jet(p, order)


class JetField(Field):
    """Field whose jets come from a callable ``(x, order) -> Jet``.

    Used for fields derived pointwise from other fields (normalized kernels,
    dual forms) whose component functions cannot be written in closed form.
    """

    def __init__(self, dim, jet_fn, name="", domain=_always, kind="vector"):
        shapes = {"scalar": (), "vector": (dim,), "form": (dim,), "sym2": (dim, dim)}
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "fn", None)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "shape", shapes[kind])
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "_jet_fn", jet_fn)

    def __call__(self, p):
        return self.jet(p, 0).value

    def jet(self, p, order=2):
        x = self.check_point(p)
        return self._jet_fn(x, order)


def flat_metric(dim, name=None) -> MetricField:
    eye = np.eye(dim)
    return MetricField(dim, lambda x: eye, name or f"flat_R{dim}", constant_curvature=0.0)


def conformally_flat_metric(dim, factor_fn, name, domain=_always, K=None) -> MetricField:
    """Metric ``factor(x) * delta`` for a scalar component function ``factor_fn``."""
    eye = np.eye(dim)
    return MetricField(dim, lambda x: factor_fn(x) * eye, name, domain, constant_curvature=K)


def sphere_chart_metric(dim, name=None) -> MetricField:
    """Unit round sphere in stereographic coordinates, ``4 (1+|u|^2)^-2 delta``."""
    return conformally_flat_metric(
        dim, lambda u: 4.0 / (1.0 + (u * u).sum()) ** 2, name or f"sphere_S{dim}", K=1.0
    )


def halfspace_metric(dim, y_min=0.0, name=None) -> MetricField:
    """Hyperbolic upper half-space ``y^-2 delta`` with ``y`` the last coordinate."""

    def domain(x, margin=0.0):
        return x[-1] > y_min + margin

    return conformally_flat_metric(
        dim, lambda x: x[dim - 1] ** -2, name or f"halfspace_H{dim}", domain, K=-1.0
    )
