"""Closed-form harmonic morphisms with their charts, metrics and expected types."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .foliation import Verdict
from .kernel import jets
from .kernel.fields import (
    MetricField,
    VectorField,
    flat_metric,
    halfspace_metric,
    sphere_chart_metric,
)
from .morphisms import SmoothMap


@dataclass(frozen=True)
class Region:
    """Sampling box with exclusion predicates.

    Each exclusion is ``(x, margin) -> bool`` returning True for points that
    must be rejected.  The margin shrinks the box and widens exclusions.
    """

    lo: np.ndarray
    hi: np.ndarray
    exclusions: tuple = ()

    def contains(self, x, margin=0.0):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lo + margin) or np.any(x > self.hi - margin):
            return False
        return not any(ex(x, margin) for ex in self.exclusions)

    @property
    def dim(self):
        return self.lo.shape[0]


def box(dim, lo, hi, *exclusions):
    return Region(np.full(dim, float(lo)), np.full(dim, float(hi)), tuple(exclusions))


@dataclass(frozen=True, eq=False)
class MorphismBundle:
    name: str
    g: MetricField
    h: MetricField
    map: SmoothMap
    region: Region
    curvature_K: Optional[float] = None
    expected_type: Verdict = Verdict.NA
    killing: Optional[VectorField] = None
    metadata: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.map.n_dim


# ---------------------------------------------------------------------------
# chart maps
# ---------------------------------------------------------------------------

def inverse_stereographic(u):
    """Chart ``R^n -> S^n subset R^{n+1}``, the pole ``(0, .., 0, 1)`` at infinity."""
    s = (u * u).sum()
    d = 1.0 / (s + 1.0)
    return jets.stack([2.0 * u[i] * d for i in range(len(u))] + [(s - 1.0) * d])


def stereographic(y):
    """Inverse of :func:`inverse_stereographic` on ``S^n`` minus the pole."""
    n = len(y) - 1
    d = 1.0 / (1.0 - y[n])
    return jets.stack([y[i] * d for i in range(n)])


def _norm_exclusion(radius):
    def ex(x, margin=0.0):
        return float(np.sqrt(np.sum(np.asarray(x) ** 2))) <= radius + margin

    return ex


def _domain_from(region):
    def domain(x, margin=0.0):
        # jet/FD stencils may leave the box slightly; only exclusions are hard limits
        return not any(ex(x, margin) for ex in region.exclusions)

    return domain


# ---------------------------------------------------------------------------
# bundles
# ---------------------------------------------------------------------------

def euclidean_projection(n=3) -> MorphismBundle:
    """Orthogonal projection ``R^{n+1} -> R^n`` (parallel-plane fibres)."""
    phi = SmoothMap(n + 1, n, lambda x: x[:n], f"euclidean_projection_{n}")
    return MorphismBundle(
        name=f"euclidean_projection_n{n}",
        g=flat_metric(n + 1),
        h=flat_metric(n),
        map=phi,
        region=box(n + 1, -1, 1),
        curvature_K=0.0,
        expected_type=Verdict.BOTH,
    )


def radial_projection(n=3) -> MorphismBundle:
    """``x -> x/|x|`` into the unit sphere, read in its stereographic chart."""

    def pole_guard(x, margin=0.0):
        x = np.asarray(x)
        return x[n] / np.linalg.norm(x) >= 0.8 - margin

    region = box(n + 1, -1, 1, _norm_exclusion(0.1), pole_guard)

    def fn(x):
        r = ((x * x).sum()) ** 0.5
        return stereographic(jets.stack([x[i] / r for i in range(n + 1)]))

    phi = SmoothMap(n + 1, n, fn, f"radial_projection_{n}", _domain_from(region))
    return MorphismBundle(
        name=f"radial_projection_n{n}",
        g=flat_metric(n + 1),
        h=sphere_chart_metric(n),
        map=phi,
        region=region,
        curvature_K=0.0,
        expected_type=Verdict.TYPE1,
        metadata={"formula": "x/|x| composed with stereographic projection"},
    )


def sphere_umbilic(n=3) -> MorphismBundle:
    """``(x_0..x_n, x_{n+1}) -> (x_0..x_n)/sqrt(1 - x_{n+1}^2)`` from S^{n+1} to S^n."""

    def poles(x, margin=0.0):
        s = float(np.sum(np.asarray(x) ** 2))
        # x_{n+1} = (s - 1)/(s + 1) reaches -1 at u = 0 and +1 at infinity
        return abs((s - 1.0) / (s + 1.0)) >= 0.9 - margin

    def target_pole(x, margin=0.0):
        y = inverse_stereographic(np.asarray(x, dtype=float))
        return y[n] / np.sqrt(max(1.0 - y[n + 1] ** 2, 1e-300)) >= 0.8 - margin

    region = box(n + 1, -2, 2, poles, target_pole)

    def fn(u):
        y = inverse_stereographic(u)
        w = (1.0 - y[n + 1] * y[n + 1]) ** -0.5
        return stereographic(jets.stack([y[i] * w for i in range(n + 1)]))

    phi = SmoothMap(n + 1, n, fn, f"sphere_umbilic_{n}", _domain_from(region))
    return MorphismBundle(
        name=f"sphere_umbilic_n{n}",
        g=sphere_chart_metric(n + 1),
        h=sphere_chart_metric(n),
        map=phi,
        region=region,
        curvature_K=1.0,
        expected_type=Verdict.TYPE1,
    )


def halfspace_projection(n=3, y_min=0.2) -> MorphismBundle:
    """``(x, y) -> x`` from the upper half-space model onto the boundary plane."""
    region = Region(np.r_[np.full(n, -1.0), y_min], np.r_[np.full(n, 1.0), 2.0])
    g = halfspace_metric(n + 1, y_min=y_min)
    phi = SmoothMap(n + 1, n, lambda x: x[:n], f"halfspace_projection_{n}", g.domain)
    return MorphismBundle(
        name=f"halfspace_projection_n{n}",
        g=g,
        h=flat_metric(n),
        map=phi,
        region=region,
        curvature_K=-1.0,
        expected_type=Verdict.TYPE1,
    )


def quadratic_killing_field():
    """``x_1 d_2 - x_2 d_1 + x_3 d_4 - x_4 d_3`` on R^4 (0-based coordinates)."""
    return VectorField(4, lambda x: jets.stack([-x[1], x[0], -x[3], x[2]]), "hopf_rotation_R4")


def quadratic_r4_r3() -> MorphismBundle:
    """Quadratic harmonic morphism R^4 -> R^3 whose fibres are orbits of a Killing field."""
    region = box(4, -1, 1, _norm_exclusion(0.1))

    def fn(x):
        x1, x2, x3, x4 = x[0], x[1], x[2], x[3]
        return jets.stack([
            0.5 * (x1 * x1 + x2 * x2 - x3 * x3 - x4 * x4),
            x1 * x4 - x2 * x3,
            x1 * x3 + x2 * x4,
        ])

    phi = SmoothMap(4, 3, fn, "quadratic_r4_r3", _domain_from(region))
    return MorphismBundle(
        name="quadratic_r4_r3",
        g=flat_metric(4),
        h=flat_metric(3),
        map=phi,
        region=region,
        curvature_K=0.0,
        expected_type=Verdict.TYPE2,
        killing=quadratic_killing_field(),
    )


def hopf() -> MorphismBundle:
    """Hopf fibration S^3 -> S^2 in stereographic charts on both sides.

    The target is the unit sphere, so the dilation is identically 2.
    """

    def target_pole(x, margin=0.0):
        y = inverse_stereographic(np.asarray(x, dtype=float))
        return 2 * (y[1] * y[2] - y[0] * y[3]) >= 0.8 - margin

    region = box(3, -1.5, 1.5, target_pole)

    def fn(u):
        y = inverse_stereographic(u)
        a, b, c, d = y[0], y[1], y[2], y[3]  # z1 = a + ib, z2 = c + id
        w = jets.stack([
            a * a + b * b - c * c - d * d,
            2.0 * (a * c + b * d),
            2.0 * (b * c - a * d),
        ])
        return stereographic(w)

    phi = SmoothMap(3, 2, fn, "hopf", _domain_from(region))
    return MorphismBundle(
        name="hopf",
        g=sphere_chart_metric(3),
        h=sphere_chart_metric(2),
        map=phi,
        region=region,
        curvature_K=1.0,
        expected_type=Verdict.NA,
        metadata={"target": "unit round S^2", "dilation": 2.0},
    )


def screw_field(m=(2.0,), dim=4):
    """``d_0 + sum_k m_k (x_{2k-1} d_{2k} - x_{2k} d_{2k-1})`` on R^dim."""

    def fn(x):
        comps = [1.0] + [0.0] * (dim - 1)
        for k, mk in enumerate(m, start=1):
            i, j = 2 * k - 1, 2 * k
            comps[j] = comps[j] + mk * x[i]
            comps[i] = comps[i] - mk * x[j]
        return jets.stack(comps)

    return VectorField(dim, fn, f"screw{tuple(m)}")


def rotation_field(dim, i, j):
    """``x_i d_j - x_j d_i`` on R^dim."""

    def fn(x):
        comps = [0.0] * dim
        comps[j] = x[i]
        comps[i] = -x[j]
        return jets.stack(comps)

    return VectorField(dim, fn, f"rot{i}{j}_R{dim}")


def sphere_rotation_field(dim, i, j):
    """Push-forward to the stereographic chart of the ambient rotation in the ``(i, j)`` plane."""

    def fn(u):
        y = inverse_stereographic(u)
        ay = [0.0] * (dim + 1)
        ay[j] = y[i]
        ay[i] = -y[j]
        s = 1.0 / (1.0 - y[dim])
        # d sigma = dy'/(1 - y_n) + y' dy_n/(1 - y_n)^2
        return jets.stack([ay[k] * s + y[k] * ay[dim] * s * s for k in range(dim)])

    return VectorField(dim, fn, f"sphere_rot{i}{j}_S{dim}")


def killing_fields_catalog():
    """Killing fields paired with the metric they preserve."""
    flat4 = flat_metric(4)
    return [
        (rotation_field(4, 0, 1), flat4),
        (rotation_field(3, 0, 1), flat_metric(3)),
        (quadratic_killing_field(), flat4),
        (screw_field((2.0,)), flat4),
        (screw_field((1.0, 3.0), dim=5), flat_metric(5)),
        (sphere_rotation_field(4, 0, 4), sphere_chart_metric(4)),
        (sphere_rotation_field(4, 1, 2), sphere_chart_metric(4)),
    ]


BUNDLES: dict[str, Callable[[], MorphismBundle]] = {
    "euclidean_projection_n3": lambda: euclidean_projection(3),
    "euclidean_projection_n4": lambda: euclidean_projection(4),
    "halfspace_projection_n3": lambda: halfspace_projection(3),
    "hopf": hopf,
    "quadratic_r4_r3": quadratic_r4_r3,
    "radial_projection_n3": lambda: radial_projection(3),
    "radial_projection_n4": lambda: radial_projection(4),
    "sphere_umbilic_n3": lambda: sphere_umbilic(3),
}


def all_bundles():
    return [BUNDLES[k]() for k in sorted(BUNDLES)]
