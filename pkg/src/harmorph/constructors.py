"""Metrics in normal form for corank-one and corank-p harmonic morphisms, and Killing quotients.

Corank one: on ``N x R`` with coordinates ``(x_1..x_n, t)``,

    g = r^-2 h + r^(2n-4) (dt + psi0)^2,

and the projection to ``(N, h)`` is a harmonic morphism with dilation ``r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Optional

import numpy as np

from .errors import PreconditionError, ValidationError, ZeroLocusError
from .foliation import Verdict, _frame_data, killing_residual, normalized_field
from .gallery import MorphismBundle, Region
from .kernel import jets
from .kernel.fields import Field, MetricField, OneFormField, ScalarField, coords_of, flat_metric
from .morphisms import SmoothMap

DEFAULT_MARGIN = 0.05
ZERO_TOL = 1e-10
KILLING_TOL = 1e-8
DET_TOL = 1e-10
DIV_TOL = 1e-8


def _box_domain(lo, hi, margin0=DEFAULT_MARGIN):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)

    def domain(x, margin=0.0):
        m = margin0 + margin
        return bool(np.all(x >= lo + m) and np.all(x <= hi - m))

    return domain


def _box_samples(lo, hi, count, seed=0):
    rng = np.random.default_rng(seed)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    m = DEFAULT_MARGIN
    return lo + m + (hi - lo - 2 * m) * rng.random((count, lo.shape[0]))


# ---------------------------------------------------------------------------
# corank one
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NormalFormData:
    h: MetricField  # on the n-chart
    psi0: OneFormField  # on the n-chart
    r_fn: ScalarField  # on the (n+1)-chart, last coordinate t
    n: int
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    name: str = "normal_form"

    def __post_init__(self):
        if self.n < 3:
            raise PreconditionError(f"normal form needs n >= 3, got {self.n}")
        if self.h.dim != self.n or self.psi0.dim != self.n or self.r_fn.dim != self.n + 1:
            raise PreconditionError("normal form data have inconsistent chart dimensions")

    @property
    def box(self):
        d = self.n + 1
        lo = np.full(d, -1.0) if self.lo is None else np.asarray(self.lo, dtype=float)
        hi = np.full(d, 1.0) if self.hi is None else np.asarray(self.hi, dtype=float)
        return lo, hi


def _corank1_components(d: NormalFormData):
    n = d.n
    e = 2 * n - 4

    def fn(X):
        xs = X[:n]
        H = jets.array(d.h.fn(xs))
        psi = jets.array(d.psi0.fn(xs))
        r = d.r_fn.fn(X)
        w = r**e
        hor = H * r**-2 + (psi[:, None] * psi[None, :]) * w
        cross = psi * w
        rows = [jets.stack([hor[i, j] for j in range(n)] + [cross[i]]) for i in range(n)]
        rows.append(jets.stack([cross[j] for j in range(n)] + [w]))
        return jets.stack(rows)

    return fn


def build_metric_corank1(d: NormalFormData, check_samples=64):
    """``(g, phi)`` for ``g = r^-2 h + r^(2n-4) (dt + psi0)^2`` and the projection ``(x, t) -> x``."""
    lo, hi = d.box
    for x in _box_samples(lo, hi, check_samples):
        rv = float(jets.value_of(d.r_fn.fn(x)))
        if not rv > 0:
            raise PreconditionError(f"r_fn must be positive, r({list(x)}) = {rv!r}")
    domain = _box_domain(lo, hi)
    g = MetricField(d.n + 1, _corank1_components(d), f"{d.name}_g", domain)
    phi = SmoothMap(d.n + 1, d.n, lambda X: X[: d.n], f"{d.name}_projection", domain)
    return g, phi


def normal_form_bundle(d: NormalFormData) -> MorphismBundle:
    g, phi = build_metric_corank1(d)
    lo, hi = d.box
    return MorphismBundle(
        name=d.name,
        g=g,
        h=d.h,
        map=phi,
        region=Region(lo + DEFAULT_MARGIN, hi - DEFAULT_MARGIN),
        expected_type=Verdict.NA,
        metadata={"constructor": "corank1"},
    )


def _monomials(n, degree):
    out = [()]
    for k in range(1, degree + 1):
        out.extend(combinations_with_replacement(range(n), k))
    return out


def _poly(coefs, monos):
    def fn(x):
        total = 0.0
        for c, m in zip(coefs, monos):
            term = c
            for a in m:
                term = term * x[a]
            total = total + term
        return total

    return fn


def random_normal_form(seed, n=3, degree=2) -> NormalFormData:
    """Seeded normal-form data on ``[-1, 1]^(n+1)`` with coefficients in ``[-0.3, 0.3]``.

    ``h = I + 0.1 * sum_k A_k trig_k(x)`` with symmetric ``A_k`` over the basis
    ``sin x_a, cos x_a``; ``psi0`` has polynomial components; ``r = exp(0.2 poly(x, t))``.
    """
    rng = np.random.default_rng(seed)

    def coef(*shape):
        return rng.uniform(-0.3, 0.3, size=shape)

    A = coef(2 * n, n, n)
    A = 0.5 * (A + A.transpose(0, 2, 1))
    eye = np.eye(n)

    def h_fn(x):
        out = eye
        for a in range(n):
            out = out + 0.1 * (A[2 * a] * jets.sin(x[a]) + A[2 * a + 1] * jets.cos(x[a]))
        return out

    mx = _monomials(n, degree)
    P = coef(n, len(mx))
    comps = [_poly(P[i], mx) for i in range(n)]

    def psi_fn(x):
        return jets.stack([c(x) for c in comps])

    mr = _monomials(n + 1, degree)
    rpoly = _poly(coef(len(mr)), mr)

    def r_fn(X):
        return jets.exp(0.2 * rpoly(X))

    return NormalFormData(
        h=MetricField(n, h_fn, f"h_seed{seed}"),
        psi0=OneFormField(n, psi_fn, f"psi0_seed{seed}"),
        r_fn=ScalarField(n + 1, r_fn, f"r_seed{seed}"),
        n=n,
        name=f"normal_form_seed{seed}_n{n}",
    )


def halfspace_normal_form(n=3, y_min=0.2, y_max=2.0) -> NormalFormData:
    """Normal-form data of the half-space projection.

    With ``r = y``, ``psi0 = 0`` and ``t = y^(2-n)/(2-n)`` the hyperbolic metric
    ``y^-2 (dx^2 + dy^2)`` becomes ``r^-2 dx^2 + r^(2n-4) dt^2``.
    """
    e = 1.0 / (2 - n)

    def r_fn(X):
        return ((2 - n) * X[n]) ** e

    t_lo, t_hi = sorted([y_min ** (2 - n) * e, y_max ** (2 - n) * e])
    zero = np.zeros(n)
    return NormalFormData(
        h=flat_metric(n),
        psi0=OneFormField(n, lambda x: zero, "zero_form"),
        r_fn=ScalarField(n + 1, r_fn, "r_halfspace"),
        n=n,
        lo=np.r_[np.full(n, -1.0 - DEFAULT_MARGIN), t_lo - DEFAULT_MARGIN],
        hi=np.r_[np.full(n, 1.0 + DEFAULT_MARGIN), t_hi + DEFAULT_MARGIN],
        name=f"halfspace_normal_form_n{n}",
    )


def halfspace_round_trip(bundle: MorphismBundle, points) -> float:
    """Max entry deviation between the bundle metric and the normal-form rebuild.

    ``r`` is read off the bundle as its dilation, then ``t(y)`` is used to pull
    the rebuilt metric back to the bundle's ``(x, y)`` chart.
    """
    from .morphisms import dilation

    n = bundle.n
    d = halfspace_normal_form(n, y_min=float(bundle.region.lo[-1]), y_max=float(bundle.region.hi[-1]))
    g_nf, _ = build_metric_corank1(d)
    worst = 0.0
    for y in points:
        y = coords_of(y)
        t = y[n] ** (2 - n) / (2 - n)
        X = np.r_[y[:n], t]
        r_bundle = dilation(bundle.map, bundle.g, bundle.h, y)
        r_nf = float(d.r_fn(X))
        if abs(r_bundle - r_nf) > 1e-10 * max(1.0, r_nf):
            raise PreconditionError(f"extracted dilation {r_bundle} disagrees with r = {r_nf}")
        Jc = np.eye(n + 1)
        Jc[n, n] = y[n] ** (1 - n)  # dt/dy
        G = Jc.T @ g_nf(X) @ Jc
        worst = max(worst, float(np.max(np.abs(G - bundle.g(y)))))
    return worst


# ---------------------------------------------------------------------------
# corank p
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CorankPData:
    """Coordinates ``(x_1..x_n, x_alpha)``; ``R``, ``P`` and ``g_fiber`` live on the full chart.

    ``P`` returns an ``(p, n)`` array of components ``P_alpha_i``.
    """

    h: MetricField
    R_fn: Field
    P: Field
    g_fiber: Field
    n: int
    p: int
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    name: str = "corank_p"

    @property
    def box(self):
        d = self.n + self.p
        lo = np.full(d, -1.0) if self.lo is None else np.asarray(self.lo, dtype=float)
        hi = np.full(d, 1.0) if self.hi is None else np.asarray(self.hi, dtype=float)
        return lo, hi


def validate_corank_p(d: CorankPData, samples=64, seed=0):
    """Raise :class:`ValidationError` on ``det g_fiber != 1`` or ``sum_alpha d_alpha P_alpha_i != 0``."""
    n, p = d.n, d.p
    lo, hi = d.box
    pts = _box_samples(lo, hi, samples, seed)
    worst_det = (0.0, pts[0])
    worst_div = (0.0, pts[0])
    for x in pts:
        viol = abs(float(np.linalg.det(np.asarray(jets.value_of(jets.array(d.g_fiber.fn(x))))) - 1.0))
        if viol > worst_det[0]:
            worst_det = (viol, x)
        Pj = jets.as_jet(d.P.fn(jets.Jet.variable(x, 1)), n + p, 1)
        dP = Pj.parts[1]  # dP[alpha, i, c]
        div = sum(dP[a, :, n + a] for a in range(p))
        viol = float(np.max(np.abs(div)))
        if viol > worst_div[0]:
            worst_div = (viol, x)
    if worst_det[0] > DET_TOL:
        raise ValidationError("det(g_fiber) = 1", worst_det[1], worst_det[0])
    if worst_div[0] > DIV_TOL:
        raise ValidationError("sum_alpha d_alpha P_alpha_i = 0", worst_div[1], worst_div[0])


def build_metric_corank_p(d: CorankPData):
    """``g = R^-p h + R^(n-2) g_ab (dx_a + P_ai dx_i)(dx_b + P_bj dx_j)`` and the projection."""
    validate_corank_p(d)
    n, p = d.n, d.p
    lo, hi = d.box

    def fn(X):
        xs = X[:n]
        H = jets.array(d.h.fn(xs))
        R = d.R_fn.fn(X)
        P = jets.array(d.P.fn(X))  # (p, n)
        F = jets.array(d.g_fiber.fn(X))  # (p, p)
        w = R ** (n - 2)
        FP = jets.einsum("ab,bi->ai", F, P) if isinstance(F, jets.Jet) or isinstance(P, jets.Jet) else F @ P
        PFP = jets.einsum("ai,aj->ij", P, FP) if isinstance(FP, jets.Jet) or isinstance(P, jets.Jet) else P.T @ FP
        hor = H * R ** (-p) + PFP * w
        cross = FP * w  # (p, n): g_{alpha i}
        fib = F * w
        rows = [jets.stack([hor[i, j] for j in range(n)] + [cross[b, i] for b in range(p)]) for i in range(n)]
        rows += [jets.stack([cross[a, j] for j in range(n)] + [fib[a, b] for b in range(p)]) for a in range(p)]
        return jets.stack(rows)

    domain = _box_domain(lo, hi)
    g = MetricField(n + p, fn, f"{d.name}_g", domain)
    phi = SmoothMap(n + p, n, lambda X: X[:n], f"{d.name}_projection", domain)
    return g, phi


def corank_p_from_normal_form(d: NormalFormData) -> CorankPData:
    """The same metric written as corank-p data with ``p = 1``: ``R = r^2``, ``P = psi0``."""
    n = d.n

    def R_fn(X):
        r = d.r_fn.fn(X)
        return r * r

    def P_fn(X):
        return jets.stack([jets.array(d.psi0.fn(X[:n]))])

    one = np.ones((1, 1))
    lo, hi = d.box
    return CorankPData(
        h=d.h,
        R_fn=ScalarField(n + 1, R_fn, "R"),
        P=Field(n + 1, P_fn, "P", shape=(1, n)),
        g_fiber=Field(n + 1, lambda X: one, "g_fiber", shape=(1, 1)),
        n=n,
        p=1,
        lo=lo,
        hi=hi,
        name=f"{d.name}_as_corank_p",
    )


# ---------------------------------------------------------------------------
# Killing quotients
# ---------------------------------------------------------------------------

def _killing_precondition(X: Field, g: MetricField, x, radius=1e-2):
    n = g.dim - 1
    if n < 3:
        raise PreconditionError(f"Killing quotient needs n >= 3, got n = {n}")
    offsets = [np.zeros(g.dim)] + [radius * s * np.eye(g.dim)[k] for k in range(g.dim) for s in (1, -1)]
    worst = max(killing_residual(X, g, x + o) for o in offsets)
    if worst > KILLING_TOL:
        raise PreconditionError(f"{X.name} is not Killing near {list(x)} (|Lie_X g| = {worst:.3e})")


def killing_quotient_scale(X: Field, g: MetricField, p, check=True):
    """``(r, r^2 g')`` with ``r = |X|^(1/(n-2))`` and ``g' = g - (X^flat/|X|)^2``."""
    x = coords_of(p)
    G = g(x)
    Xv = X(x)
    nrm = float(np.sqrt(max(Xv @ G @ Xv, 0.0)))
    if nrm < ZERO_TOL:
        raise ZeroLocusError(f"{X.name} vanishes at {list(x)}")
    if check:
        _killing_precondition(X, g, x)
    n = g.dim - 1
    r = nrm ** (1.0 / (n - 2))
    Xf = G @ Xv / nrm
    return r, r * r * (G - np.outer(Xf, Xf))


def killing_exponent_residual(X: Field, g: MetricField, p, sign=1):
    """Frame tension ``|r ((n-2) e_i(log r) + <nabla_u u, e_i>)|`` for ``r = |X|^(sign/(n-2))``.

    The fibres are the orbits of ``X`` and ``u = X/|X|``.  This vanishes for
    Killing ``X`` exactly when ``sign = +1``.
    """
    x = coords_of(p)
    n = g.dim - 1
    if n < 3:
        raise PreconditionError(f"needs n >= 3, got n = {n}")
    xj = X.jet(x, 1)
    nrm2 = jets.einsum("i,i->", xj, jets.matvec(g.jet(x, 1), xj))
    if nrm2.value < ZERO_TOL**2:
        raise ZeroLocusError(f"{X.name} vanishes at {list(x)}")
    dlog_norm = 0.5 * nrm2.parts[1] / nrm2.value
    s = sign / (n - 2)
    u = normalized_field(X, g)
    _, _, E, B = _frame_data(u, g, x)
    ri = E[:, 1:].T @ (s * dlog_norm)
    r = float(nrm2.value) ** (0.5 * s)
    return float(r * np.linalg.norm((n - 2) * ri + B[1:, 0]))
