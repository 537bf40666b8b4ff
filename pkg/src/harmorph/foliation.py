"""Frame invariants of corank-one foliations and the space-form classification.

For a unit field ``u`` with adapted orthonormal frame ``(e_0 = u, e_1, ..., e_n)``
the covariant derivative of ``u`` splits as

    <nabla_{e_j} u, e_i> = -r0 delta_ij + a_ij + D_ij,
    <nabla_u u, e_i>     = -(n - 2) r_i,

with ``a`` antisymmetric and ``D`` the symmetric traceless conformality defect.
The one-form ``rho = r0 u^flat + r_i e_i^flat`` must be closed for the integral
curves of ``u`` to be fibres of a harmonic morphism; when it is, ``rho = d log r``
for the dilation ``r`` of that morphism.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionError,
    PreconditionError,
    SubmersionError,
)
from .kernel import fd, jets
from .kernel.fields import Field, JetField, MetricField, coords_of
from .kernel.tensors import (
    adapted_frame,
    constant_curvature_deviation,
    christoffel,
    covariant_derivative,
    lie_derivative,
)
from .morphisms import SmoothMap, _evaluate, _hwc, dilation

UNIT_TOL = 1e-9
RANK_TOL = 1e-10


class Verdict(str, enum.Enum):
    TYPE1 = "Type1"
    TYPE2 = "Type2"
    BOTH = "Both"
    NEITHER = "Neither"
    NA = "NA"  # n = 2, outside the classification


@dataclass(frozen=True)
class FrameInvariants:
    r0: float
    r: np.ndarray
    a: np.ndarray
    conformality_defect: np.ndarray
    frame: np.ndarray  # columns e_0 .. e_n
    mean_curvature: np.ndarray  # <nabla_u u, e_i>, i = 1..n


@dataclass(frozen=True)
class TypeReport:
    type1_residual: float
    type2_residual: float
    verdict: Verdict
    tolerance: float


class RhoClosedness(NamedTuple):
    rho: np.ndarray
    d_rho: np.ndarray
    residual: float


# --------------------------------------------------------------------------
# unit fields
# --------------------------------------------------------------------------

def normalized_field(X: Field, g: MetricField, name=None) -> JetField:
    """``X / |X|_g`` as a jet-evaluable field."""

    def jet_fn(x, order):
        xj = X.jet(x, order)
        nrm2 = jets.einsum("i,i->", xj, jets.matvec(g.jet(x, order), xj))
        return xj * nrm2**-0.5

    return JetField(X.dim, jet_fn, name or f"unit({X.name})", X.domain, kind="vector")


def _kernel_jet(phi: SmoothMap, x, order):
    J = phi.jet(x, order + 1).grad()  # J[i, a] = d_a phi^i, as a jet
    J0 = J.value
    s = np.linalg.svd(J0, compute_uv=False)
    if s.size < phi.n_dim or s[-1] <= RANK_TOL * max(s[0], 1.0):
        raise SubmersionError(f"{phi.name}: differential not of rank {phi.n_dim} at {list(x)}")
    k0 = np.linalg.svd(J0)[2][-1]
    c = int(np.argmax(np.abs(k0)))
    others = [a for a in range(phi.m_dim) if a != c]
    sol = -jets.matvec(jets.inv(J[:, others]), J[:, c])
    comps = []
    it = iter(range(phi.n_dim))
    for a in range(phi.m_dim):
        comps.append(1.0 if a == c else sol[next(it)])
    return jets.stack(comps)


def vertical_field(phi: SmoothMap, g: MetricField) -> JetField:
    """Unit generator of ``ker dphi`` for a corank-one submersion.

    The sign makes the first component of largest magnitude positive.
    """

    def jet_fn(x, order):
        k = _kernel_jet(phi, x, order)
        nrm2 = jets.einsum("i,i->", k, jets.matvec(g.jet(x, order), k))
        u = k * nrm2**-0.5
        v = u.value
        i = int(np.argmax(np.abs(v)))
        return u * (1.0 if v[i] > 0 else -1.0)

    return JetField(phi.m_dim, jet_fn, f"vertical({phi.name})", phi.domain, kind="vector")


def vertical_unit_field(phi: SmoothMap, g: MetricField, p):
    return vertical_field(phi, g)(coords_of(p))


# --------------------------------------------------------------------------
# invariants
# --------------------------------------------------------------------------

def _frame_data(u: Field, g: MetricField, p):
    x = coords_of(p)
    G = g(x)
    uj = u.jet(x, 1)
    u0 = uj.value
    nab = uj.parts[1] + np.einsum("abc,c->ab", christoffel(g, x), u0)
    nu = u0 @ G @ u0
    if abs(nu - 1.0) > UNIT_TOL:
        raise PreconditionError(f"field is not g-unit at {list(x)}: g(u,u) = {nu!r}")
    E = adapted_frame(g, x, u0).vectors
    # B[i, j] = <nabla_{e_j} u, e_i> over the whole frame
    B = E.T @ G @ nab @ E
    return x, G, E, B


def frame_invariants(u: Field, g: MetricField, p) -> FrameInvariants:
    n = g.dim - 1
    if n < 3:
        raise DimensionError(f"frame invariants need n >= 3 (n - 2 appears as a divisor), got n = {n}")
    x, G, E, B = _frame_data(u, g, p)
    M = B[1:, 1:]
    v = B[1:, 0]
    r0 = -np.trace(M) / n
    a = 0.5 * (M - M.T)
    sym = 0.5 * (M + M.T)
    return FrameInvariants(
        r0=float(r0),
        r=-v / (n - 2),
        a=a,
        conformality_defect=sym + r0 * np.eye(n),
        frame=E,
        mean_curvature=v,
    )


def _transverse_metric(u: Field, g: MetricField) -> JetField:
    def jet_fn(x, order):
        gj = g.jet(x, order)
        w = jets.matvec(gj, u.jet(x, order))
        return gj - w[:, None] * w[None, :]

    return JetField(g.dim, jet_fn, f"transverse({g.name})", g.domain, kind="sym2")


def conformality_residual(u: Field, g: MetricField, p, route="frame"):
    """Size of the failure of ``Lie_u g' = -2 r0 g'``.

    ``route="frame"`` is the Frobenius norm of the frame conformality defect;
    ``route="lie"`` differentiates ``g' = g - u^flat (x) u^flat`` directly and
    measures ``(Lie_u g' + 2 r0 g')/2`` on the orthonormal frame.
    """
    fi = frame_invariants(u, g, p)
    if route == "frame":
        return float(np.linalg.norm(fi.conformality_defect))
    if route != "lie":
        raise ValueError(f"route must be 'frame' or 'lie', got {route!r}")
    x = coords_of(p)
    gp = _transverse_metric(u, g)
    T = lie_derivative(u, gp, x) + 2.0 * fi.r0 * gp(x)
    E = fi.frame
    return float(np.linalg.norm(E.T @ T @ E)) / 2.0


def _rho(fi: FrameInvariants, G):
    E = fi.frame
    return G @ (fi.r0 * E[:, 0] + E[:, 1:] @ fi.r)


def rho_covector(u: Field, g: MetricField, p):
    """Coordinate components of ``rho = r0 u^flat + r_i e_i^flat``."""
    return _rho(frame_invariants(u, g, p), g(coords_of(p)))


def _closedness(D, E):
    # D[b, a] = d_a rho_b
    d_rho = D.T - D
    return d_rho, float(np.linalg.norm(E.T @ d_rho @ E) / np.sqrt(2.0))


def rho_and_closedness(u: Field, g: MetricField, p) -> RhoClosedness:
    """``rho``, its exterior derivative by central differences, and ``|d rho|`` on the frame."""
    x = coords_of(p)
    fi = frame_invariants(u, g, x)
    rho = _rho(fi, g(x))
    D = fd.gradient(lambda y: rho_covector(u, g, y), x)
    d_rho, res = _closedness(D, fi.frame)
    return RhoClosedness(rho, d_rho, res)


def classify_type(u: Field, g: MetricField, K: float, p, tol=1e-6, curvature_tol=1e-7) -> TypeReport:
    """Pointwise dichotomy for unit fields on a space form of curvature ``K``.

    Type 1: ``r_i = a_ij = 0`` and ``d r0 = (r0^2 + K) u^flat``.
    Type 2: ``r0 = 0`` and ``d rho = 0``.
    """
    x = coords_of(p)
    dev = constant_curvature_deviation(g, x, K)
    if dev > curvature_tol:
        raise PreconditionError(f"metric {g.name} is not of constant curvature {K} at {list(x)} (dev {dev:.3e})")
    fi = frame_invariants(u, g, x)
    G = g(x)
    E = fi.frame

    def r0_and_rho(y):
        f = frame_invariants(u, g, y)
        Gy = g(y)
        # r0 is odd under u -> -u; keep the orientation of u at x across the stencil
        s = 1.0 if f.frame[:, 0] @ Gy @ E[:, 0] >= 0 else -1.0
        return np.r_[s * f.r0, _rho(f, Gy)]

    D = fd.gradient(r0_and_rho, x)
    dr0 = D[0]
    omega0 = G @ E[:, 0]
    structure = E.T @ (dr0 - (fi.r0**2 + K) * omega0)
    t1 = max(
        float(np.max(np.abs(fi.r), initial=0.0)),
        float(np.max(np.abs(fi.a), initial=0.0)),
        float(np.linalg.norm(structure)),
    )
    _, closed = _closedness(D[1:], E)
    t2 = max(abs(fi.r0), closed)
    ok1, ok2 = t1 < tol, t2 < tol
    verdict = (
        Verdict.BOTH if ok1 and ok2 else Verdict.TYPE1 if ok1 else Verdict.TYPE2 if ok2 else Verdict.NEITHER
    )
    return TypeReport(t1, t2, verdict, tol)


def killing_residual(X: Field, g: MetricField, p):
    """Frobenius norm of ``Lie_X g``."""
    return float(np.linalg.norm(lie_derivative(X, g, p)))


def fiber_minimality_residual(u: Field, g: MetricField, p):
    """``g``-length of the horizontal part of ``nabla_u u`` (fibre curvature)."""
    x = coords_of(p)
    G = g(x)
    u0 = u(x)
    w = covariant_derivative(u, g, x) @ u0
    hor = w - (u0 @ G @ w) * u0
    return float(np.sqrt(max(hor @ G @ hor, 0.0)))


def tension_via_frames(phi: SmoothMap, g: MetricField, h: MetricField, p, hwc_tol=1e-6):
    """Tension from frame data, ``tau_i = -r((n-2) r_i + H_i00)``, in target coordinates.

    Here ``r_i = e_i(log r)`` for the dilation ``r`` and ``H_i00 = <nabla_u u, e_i>``.
    Only valid where ``phi`` is horizontally conformal.
    """
    n = phi.n_dim
    if n < 3:
        raise DimensionError(f"frame tension formula used with n = {n}; needs n >= 3")
    x = coords_of(p)
    d = _evaluate(phi, g, h, x)
    defect, R = _hwc(d, n)
    if np.linalg.norm(defect) > hwc_tol * max(1.0, R):
        raise PreconditionError(f"{phi.name} not horizontally conformal at {list(x)}")
    u = vertical_field(phi, g)
    _, _, E, B = _frame_data(u, g, x)
    v = B[1:, 0]
    dlogr = fd.gradient(lambda y: np.log(dilation(phi, g, h, y)), x)
    ri = E[:, 1:].T @ dlogr
    # tau = sum_i tau_i dphi(e_i)/r
    return d.J @ E[:, 1:] @ (-((n - 2) * ri + v))


# --------------------------------------------------------------------------
# first torsion function on the prolongation
# --------------------------------------------------------------------------

def prolongation_p(s, r0, r, n):
    """``p_i = s_i - (n - 2) r0 r_i``."""
    return np.asarray(s) - (n - 2) * r0 * np.asarray(r)


def torsion_S(p_vec, a_mat, n=None):
    """Torsion ``S[i, j, k]`` from ``p`` and antisymmetric ``a``.

    ``(n-2) S_ijk = (n-1)(p_j a_ki - p_k a_ji - 2 p_i a_jk)
                    - 3(delta_ij p_l a_kl - delta_ik p_l a_jl)``

    Works on float arrays and on object arrays of ``fractions.Fraction`` (exact).
    """
    p = np.asarray(p_vec)
    a = np.asarray(a_mat)
    if n is None:
        n = p.shape[0]
    if n < 3:
        raise DimensionError("torsion_S needs n >= 3")
    if p.shape != (n,) or a.shape != (n, n):
        raise PreconditionError(f"shapes {p.shape}, {a.shape} do not match n = {n}")
    if a.dtype == object:
        antisym = all(a[i, j] == -a[j, i] for i in range(n) for j in range(n))
    else:
        antisym = np.max(np.abs(a + a.T), initial=0.0) <= 1e-12 * max(1.0, np.max(np.abs(a), initial=0.0))
    if not antisym:
        raise PreconditionError("torsion_S needs an antisymmetric a")
    q = (a * p[None, :]).sum(axis=1)  # q_k = p_l a_kl
    pi = p[:, None, None]
    pj = p[None, :, None]
    pk = p[None, None, :]
    a_ki = a.T[:, None, :]  # [i, ., k] -> a[k, i]
    a_ji = a.T[:, :, None]  # [i, j, .] -> a[j, i]
    a_jk = a[None, :, :]
    first = pj * a_ki - pk * a_ji - 2 * (pi * a_jk)
    eye = np.eye(n, dtype=int)
    second = eye[:, :, None] * q[None, None, :] - eye[:, None, :] * q[None, :, None]
    return ((n - 1) * first - 3 * second) / (n - 2)


# --------------------------------------------------------------------------
# scale reconstruction
# --------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def reconstruct_scale(u: Field, g: MetricField, base, p, closed_tol=1e-6, n_checks=3):
    """``r(p) = exp(int_0^1 rho(base + t (p - base)) . (p - base) dt)``, so ``r(base) = 1``."""
    b = coords_of(base)
    q = coords_of(p)
    seg = q - b
    u.check_point(b)
    u.check_point(q)
    for t in np.linspace(0, 1, n_checks + 2)[1:-1]:
        res = rho_and_closedness(u, g, b + t * seg).residual
        if res > closed_tol:
            raise PreconditionError(f"rho not closed along the segment (|d rho| = {res:.3e} at t = {t:.2f})")
    ts = 0.5 * (_GL_NODES + 1.0)
    ws = 0.5 * _GL_WEIGHTS
    total = sum(w * (rho_covector(u, g, b + t * seg) @ seg) for t, w in zip(ts, ws))
    return float(np.exp(total))
