"""Pointwise harmonic-morphism residuals: energy, dilation, conformality, tension."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError, ShapeError
from .kernel import jets
from .kernel.fields import MetricField, coords_of
from .kernel.jets import Jet
from .kernel.tensors import _inverse, christoffel

DEGENERATE_R = 1e-12


def _always(x, margin=0.0):
    return True


@dataclass(frozen=True, eq=False)
class SmoothMap:
    """Map from an ``m_dim`` chart to an ``n_dim`` chart.

    ``fn`` takes a coordinate vector (array or vector jet) and returns the
    image coordinates; ``domain`` is a predicate ``(x, margin) -> bool``.
    """

    m_dim: int
    n_dim: int
    fn: Callable
    name: str = ""
    domain: Callable = field(default=_always, repr=False)

    def check_point(self, p, margin=0.0):
        x = coords_of(p)
        if x.shape[0] != self.m_dim:
            raise ShapeError(f"{self.name}: point has {x.shape[0]} coords, domain chart has {self.m_dim}")
        if not self.domain(x, margin):
            raise DomainError(f"{self.name}: {list(x)} outside the map's domain")
        return x

    def domain_ok(self, p, margin=0.0):
        return bool(self.domain(coords_of(p), margin))

    def __call__(self, p):
        x = self.check_point(p)
        y = np.asarray(jets.value_of(jets.array(self.fn(x))), dtype=float)
        if y.shape != (self.n_dim,):
            raise ShapeError(f"{self.name}: image has shape {y.shape}, expected ({self.n_dim},)")
        return y

    def jet(self, p, order=2) -> Jet:
        if order not in (0, 1, 2, 3):
            raise ConfigError(f"jet order must be in 0..3, got {order}")
        x = self.check_point(p)
        out = jets.as_jet(self.fn(Jet.variable(x, order)), self.m_dim, order)
        if out.shape != (self.n_dim,):
            raise ShapeError(f"{self.name}: image has shape {out.shape}, expected ({self.n_dim},)")
        return out

    def jacobian(self, p):
        """``J[i, a] = d_a phi^i``."""
        return self.jet(p, 1).parts[1]


@dataclass(frozen=True)
class MorphismResidual:
    tension_norm: float
    hwc_norm: float
    dilation_sq: float
    degenerate: bool = False

    def max_residual(self):
        return max(self.tension_norm, self.hwc_norm)

    def passes(self, tol):
        return self.max_residual() < tol


@dataclass(frozen=True)
class _MapData:
    x: np.ndarray
    y: np.ndarray
    J: np.ndarray
    H: np.ndarray | None
    ginv: np.ndarray
    hy: np.ndarray


def _evaluate(phi: SmoothMap, g: MetricField, h: MetricField, p, order=1) -> _MapData:
    if g.dim != phi.m_dim or h.dim != phi.n_dim:
        raise ShapeError(
            f"map {phi.name} is {phi.m_dim}->{phi.n_dim} but metrics have dims {g.dim}, {h.dim}"
        )
    x = coords_of(p)
    pj = phi.jet(x, order)
    y = pj.value
    ginv = _inverse(g(x))
    hy = h(y)
    return _MapData(x, y, pj.parts[1], pj.parts[2] if order >= 2 else None, ginv, hy)


def _energy(d: _MapData):
    return float(np.einsum("ab,ia,jb,ij->", d.ginv, d.J, d.J, d.hy))


def energy_density(phi, g, h, p):
    """``|phi'|^2 = g^{ab} h_ij d_a phi^i d_b phi^j``."""
    return _energy(_evaluate(phi, g, h, p))


def dilation(phi, g, h, p):
    """``r`` with ``n r^2 = |phi'|^2``."""
    return float(np.sqrt(energy_density(phi, g, h, p) / phi.n_dim))


def _hwc(d: _MapData, n):
    M = d.J @ d.ginv @ d.J.T @ d.hy
    R = float(np.trace(M)) / n
    return M - R * np.eye(n), R


def hwc_residual(phi, g, h, p):
    """Conformality defect ``M - R Id`` with ``M^i_j = g^{ab} d_a phi^i d_b phi^k h_kj``."""
    return _hwc(_evaluate(phi, g, h, p), phi.n_dim)


def _tension(d: _MapData, g, h):
    gam_g = christoffel(g, d.x)
    gam_h = christoffel(h, d.y)
    hess = d.H - np.einsum("cab,ic->iab", gam_g, d.J) + np.einsum("ijk,ja,kb->iab", gam_h, d.J, d.J)
    return np.einsum("ab,iab->i", d.ginv, hess)


def tension_field(phi, g, h, p):
    """Tension ``tau^i`` in target coordinates at ``phi(p)``."""
    return _tension(_evaluate(phi, g, h, p, order=2), g, h)


def harmonic_morphism_residual(phi, g, h, p) -> MorphismResidual:
    d = _evaluate(phi, g, h, p, order=2)
    tau = _tension(d, g, h)
    defect, R = _hwc(d, phi.n_dim)
    tn = float(np.sqrt(max(tau @ d.hy @ tau, 0.0)))
    return MorphismResidual(
        tension_norm=tn,
        hwc_norm=float(np.linalg.norm(defect)),
        dilation_sq=max(R, 0.0),
        degenerate=R < DEGENERATE_R,
    )


def pullback_metric(phi, h, p):
    """``(phi^* h)_ab = h_ij(phi(p)) d_a phi^i d_b phi^j``."""
    pj = phi.jet(p, 1)
    if h.dim != phi.n_dim:
        raise ShapeError(f"target metric has dim {h.dim}, map has n_dim {phi.n_dim}")
    J = pj.parts[1]
    return J.T @ h(pj.value) @ J


def perturbed(phi: SmoothMap, amplitude=0.05, component=0, name=None) -> SmoothMap:
    """Adds ``amplitude * sin(x_1)`` to one image component."""

    def fn(x):
        y = list(jets.array(phi.fn(x)))
        y[component] = y[component] + amplitude * jets.sin(x[0])
        return jets.stack(y)

    return SmoothMap(phi.m_dim, phi.n_dim, fn, name or f"{phi.name}+{amplitude}sin", phi.domain)
