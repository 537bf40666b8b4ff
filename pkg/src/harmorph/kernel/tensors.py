"""Coordinate tensor calculus at a point: connection, curvature, Lie and exterior derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FrameError, PreconditionError, ShapeError, SingularMetricError
from . import jets
from .fields import Field, MetricField, OneFormField, VectorField, coords_of

# Laplacian sign: the library uses the geometer's convention
#   Delta f = -g^{ab} (d_a d_b f - Gamma^c_ab d_c f),
# so Delta(x^2) = -2 on flat R^n and tension = -Delta for maps into flat targets.

FRAME_PIVOT_TOL = 1e-8


def _inverse(G):
    try:
        c = np.linalg.cond(G)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError(str(exc)) from exc
    if not np.isfinite(c) or c > 1e14:
        raise SingularMetricError(f"metric matrix is singular (cond={c:.3e})")
    return np.linalg.inv(G)


def metric_inverse(g: MetricField, p):
    return _inverse(g(p))


def _christoffel_from(ginv, dg):
    # dg[i, j, k] = d_k g_ij
    lowered = 0.5 * (dg.transpose(0, 2, 1) + dg - dg.transpose(2, 0, 1))
    # lowered[d, b, c] = 1/2 (d_b g_dc + d_c g_db - d_d g_bc)
    return np.einsum("ad,dbc->abc", ginv, lowered)


def christoffel(g: MetricField, p):
    """Christoffel symbols ``Gamma[a, b, c] = Gamma^a_bc`` of the Levi-Civita connection."""
    J = g.jet(p, 1)
    G = J.value
    gam = _christoffel_from(_inverse(G), J.parts[1])
    return 0.5 * (gam + gam.transpose(0, 2, 1))


def christoffel_jet(g: MetricField, p, order=1):
    """Christoffel symbols as a jet (needs the metric to ``order + 1``)."""
    J = g.jet(p, order + 1)
    _inverse(J.value)
    ginv = jets.inv(J.truncate(order))
    dg = J.grad()
    lowered = 0.5 * (dg.transpose(0, 2, 1) + dg - dg.transpose(2, 0, 1))
    return jets.einsum("ad,dbc->abc", ginv, lowered)


def riemann(g: MetricField, p):
    """Fully covariant curvature ``R[a, b, c, d]``.

    Convention: ``R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db
    - Gamma^a_de Gamma^e_cb`` and ``R_abcd = g_ae R^e_bcd``, so a space form of
    curvature ``K`` has ``R_abcd = K (g_ac g_bd - g_ad g_bc)``.
    """
    gam_j = christoffel_jet(g, p, 1)
    gam = gam_j.value
    dgam = gam_j.parts[1]  # dgam[a, b, c, k] = d_k Gamma^a_bc
    up = (
        np.einsum("adbc->abcd", dgam)
        - np.einsum("acbd->abcd", dgam)
        + np.einsum("ace,edb->abcd", gam, gam)
        - np.einsum("ade,ecb->abcd", gam, gam)
    )
    return np.einsum("ae,ebcd->abcd", g(p), up)


def orthonormal_basis(G):
    """Columns form a ``G``-orthonormal basis (Cholesky based)."""
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError("metric is not positive definite") from exc
    return np.linalg.inv(L).T


def frame_components(T, E):
    """Components of a covariant tensor ``T`` on the frame given by the columns of ``E``."""
    out = T
    for _ in range(T.ndim):
        out = np.tensordot(out, E, axes=([0], [0]))
    return out


def riemann_and_sectional(g: MetricField, p):
    """Curvature tensor and the sectional curvature function ``(X, Y) -> K(X ^ Y)``."""
    R = riemann(g, p)
    G = g(p)

    def sectional(X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        area = (X @ G @ X) * (Y @ G @ Y) - (X @ G @ Y) ** 2
        if area <= 1e-300:
            raise PreconditionError("sectional curvature needs linearly independent vectors")
        return float(np.einsum("abcd,a,b,c,d->", R, X, Y, X, Y) / area)

    return R, sectional


def constant_curvature_deviation(g: MetricField, p, K):
    """Max orthonormal-frame deviation of ``R_abcd`` from ``K (d_ac d_bd - d_ad d_bc)``."""
    R = riemann(g, p)
    E = orthonormal_basis(g(p))
    Rhat = frame_components(R, E)
    n = g.dim
    d = np.eye(n)
    model = K * (np.einsum("ac,bd->abcd", d, d) - np.einsum("ad,bc->abcd", d, d))
    return float(np.max(np.abs(Rhat - model)))


def _rank(T: Field):
    if isinstance(T, (VectorField, OneFormField)):
        return 1
    kind = getattr(T, "kind", None)
    if kind in ("vector", "form"):
        return 1
    return len(T.expected_shape)


def lie_derivative(X: Field, T: Field, p):
    """Coordinate Lie derivative of a covariant 1- or 2-tensor field along ``X``."""
    if X.dim != T.dim:
        raise ShapeError(f"Lie derivative of a dim-{T.dim} tensor along a dim-{X.dim} field")
    xj = X.jet(p, 1)
    tj = T.jet(p, 1)
    Xv, dX = xj.value, xj.parts[1]  # dX[c, a] = d_a X^c
    Tv, dT = tj.value, tj.parts[1]
    if Tv.ndim == 1:
        if getattr(T, "kind", "form") == "vector" or isinstance(T, VectorField):
            raise ShapeError("lie_derivative expects a covariant tensor, got a vector field")
        return dT @ Xv + dX.T @ Tv
    if Tv.ndim == 2:
        out = np.einsum("abc,c->ab", dT, Xv) + np.einsum("cb,ca->ab", Tv, dX) + np.einsum("ac,cb->ab", Tv, dX)
        return out
    raise ShapeError(f"unsupported tensor shape {Tv.shape}")


def exterior_derivative_1form(alpha: Field, p):
    """``(d alpha)[a, b] = d_a alpha_b - d_b alpha_a``."""
    d = alpha.jet(p, 1).parts[1]  # d[b, a] = d_a alpha_b
    return d.T - d


def flat(g: MetricField, p, v):
    return g(p) @ np.asarray(v, dtype=float)


def sharp(g: MetricField, p, alpha):
    return metric_inverse(g, p) @ np.asarray(alpha, dtype=float)


def musical(g: MetricField, p, v_or_alpha, to="flat"):
    """Index lowering (``to="flat"``) or raising (``to="sharp"``)."""
    if to == "flat":
        return flat(g, p, v_or_alpha)
    if to == "sharp":
        return sharp(g, p, v_or_alpha)
    raise ValueError(f"to must be 'flat' or 'sharp', got {to!r}")


@dataclass(frozen=True)
class AdaptedFrame:
    base: np.ndarray
    vectors: np.ndarray  # columns e_0 .. e_n

    def __getitem__(self, i):
        return self.vectors[:, i]

    @property
    def horizontal(self):
        return self.vectors[:, 1:]


def gram_schmidt(G, first):
    """``G``-orthonormal basis starting with ``first``; candidates are coordinate axes in order."""
    d = G.shape[0]
    vecs = [np.asarray(first, dtype=float)]
    for k in range(d):
        if len(vecs) == d:
            break
        c = np.zeros(d)
        c[k] = 1.0
        # two passes for orthogonality at machine precision
        for _ in range(2):
            for v in vecs:
                c = c - (v @ G @ c) * v
        nrm = np.sqrt(max(c @ G @ c, 0.0))
        if nrm < FRAME_PIVOT_TOL:
            continue
        vecs.append(c / nrm)
    if len(vecs) < d:
        raise FrameError(f"only {len(vecs)} independent directions found in dimension {d}")
    return np.column_stack(vecs)


def adapted_frame(g: MetricField, p, u) -> AdaptedFrame:
    """Orthonormal frame with ``e_0 = u``."""
    G = g(p)
    u = np.asarray(u, dtype=float)
    nu = u @ G @ u
    if abs(nu - 1.0) > 1e-9:
        raise PreconditionError(f"adapted_frame needs a unit vector, g(u,u) = {nu!r}")
    return AdaptedFrame(coords_of(p).copy(), gram_schmidt(G, u))


def covariant_derivative(u: Field, g: MetricField, p):
    """``nabla[a, b] = (nabla_{d_b} u)^a`` for a vector field ``u``."""
    uj = u.jet(p, 1)
    return uj.parts[1] + np.einsum("abc,c->ab", christoffel(g, p), uj.value)


def laplace_beltrami(g: MetricField, f: Field, p):
    """``Delta f = -g^{ab}(d_a d_b f - Gamma^c_ab d_c f)`` (non-negative spectrum)."""
    fj = f.jet(p, 2)
    ginv = metric_inverse(g, p)
    gam = christoffel(g, p)
    hess = fj.parts[2] - np.einsum("cab,c->ab", gam, fj.parts[1])
    return float(-np.einsum("ab,ab->", ginv, hess))
