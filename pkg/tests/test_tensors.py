import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmorph.errors import PreconditionError, ShapeError, SingularMetricError
from harmorph.gallery import inverse_stereographic
from harmorph.kernel import fd, jets
from harmorph.kernel.fields import (
    MetricField,
    OneFormField,
    ScalarField,
    VectorField,
    conformally_flat_metric,
    flat_metric,
    halfspace_metric,
    sphere_chart_metric,
)
from harmorph.kernel.tensors import (
    adapted_frame,
    christoffel,
    constant_curvature_deviation,
    exterior_derivative_1form,
    gram_schmidt,
    laplace_beltrami,
    lie_derivative,
    musical,
    riemann,
    riemann_and_sectional,
)

pts3 = st.lists(st.floats(-0.9, 0.9), min_size=3, max_size=3).map(np.array)


def bumpy_metric():
    """Positive definite metric on R^3 with off-diagonal terms."""

    def fn(x):
        a = 0.2 * jets.sin(x[0] + x[2])
        b = 0.1 * x[1] * x[0]
        return jets.array([
            [2.0 + x[1] * x[1], a, b],
            [a, 1.5 + 0.3 * jets.cos(x[2]), 0.0],
            [b, 0.0, 1.0 + 0.5 * x[0] * x[0]],
        ])

    return MetricField(3, fn, "bumpy")


@settings(max_examples=25, deadline=None)
@given(pts3)
def test_christoffel_conformal_flat_closed_form(x):
    # g = e^{2 phi} delta: Gamma^a_bc = delta_ab phi_c + delta_ac phi_b - delta_bc phi_a
    g = conformally_flat_metric(3, lambda y: jets.exp(2 * (0.3 * y[0] * y[1] + 0.2 * y[2])), "conf")
    dphi = np.array([0.3 * x[1], 0.3 * x[0], 0.2])
    d = np.eye(3)
    expected = (
        np.einsum("ab,c->abc", d, dphi) + np.einsum("ac,b->abc", d, dphi) - np.einsum("bc,a->abc", d, dphi)
    )
    np.testing.assert_allclose(christoffel(g, x), expected, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(pts3)
def test_christoffel_matches_fd_of_metric(x):
    g = bumpy_metric()
    dg = fd.gradient(g, x)  # dg[i, j, k] = d_k g_ij
    G = g(x)
    low = 0.5 * (np.einsum("dcb->dbc", dg) + dg - np.einsum("bcd->dbc", dg))
    expected = np.linalg.solve(G, low.reshape(3, -1)).reshape(3, 3, 3)
    np.testing.assert_allclose(christoffel(g, x), expected, atol=1e-8)


@pytest.mark.parametrize(
    "g,K,x",
    [
        (sphere_chart_metric(3), 1.0, [0.3, -0.4, 0.8]),
        (sphere_chart_metric(4), 1.0, [1.2, 0.1, -0.5, 0.3]),
        (halfspace_metric(3), -1.0, [0.4, -0.2, 0.7]),
        (halfspace_metric(4), -1.0, [0.1, 0.2, 0.3, 1.4]),
        (flat_metric(4), 0.0, [0.0, 0.0, 0.0, 0.0]),
    ],
)
def test_space_forms_have_model_curvature(g, K, x):
    assert constant_curvature_deviation(g, np.array(x), K) < 1e-7
    _, sec = riemann_and_sectional(g, np.array(x))
    assert sec(np.eye(g.dim)[0], np.eye(g.dim)[1] + 0.3 * np.eye(g.dim)[2]) == pytest.approx(K, abs=1e-8)


def test_surface_of_revolution_gauss_curvature():
    # g = dx^2 + f(x)^2 dy^2 has K = -f''/f; with f = cosh x, K = -1
    def fn(x):
        f = 0.5 * (jets.exp(x[0]) + jets.exp(-x[0]))
        return jets.array([[1.0, 0.0 * x[1]], [0.0 * x[1], f * f]])

    g = MetricField(2, fn, "cosh")
    x = np.array([0.4, 0.1])
    R = riemann(g, x)
    detg = np.linalg.det(g(x))
    assert R[0, 1, 0, 1] / detg == pytest.approx(-1.0, abs=1e-9)


def test_riemann_symmetries_on_bumpy_metric():
    R = riemann(bumpy_metric(), np.array([0.2, -0.3, 0.5]))
    np.testing.assert_allclose(R, -R.transpose(1, 0, 2, 3), atol=1e-10)
    np.testing.assert_allclose(R, -R.transpose(0, 1, 3, 2), atol=1e-10)
    np.testing.assert_allclose(R, R.transpose(2, 3, 0, 1), atol=1e-10)
    bianchi = R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2)
    assert np.max(np.abs(bianchi)) < 1e-10
    assert constant_curvature_deviation(bumpy_metric(), np.array([0.2, -0.3, 0.5]), 0.0) > 1e-2


def _expm(A, t, terms=30):
    out = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, terms):
        term = term @ (t * A) / k
        out = out + term
    return out


def test_lie_derivative_matches_flow_pullback():
    # linear field X = A x, flow exp(tA); d/dt (Phi_t^* T) at t = 0
    A = np.array([[0.1, 0.5, 0.0], [-0.3, 0.2, 0.4], [0.0, 0.1, -0.2]])
    X = VectorField(3, lambda x: jets.stack([sum(A[i, j] * x[j] for j in range(3)) for i in range(3)]), "lin")
    T = bumpy_metric()
    x = np.array([0.3, -0.1, 0.2])

    def pulled(t):
        P = _expm(A, t)
        return P.T @ T(P @ x) @ P

    h = 1e-4
    oracle = (pulled(h) - pulled(-h)) / (2 * h)
    np.testing.assert_allclose(lie_derivative(X, T, x), oracle, atol=1e-7)


def test_lie_derivative_of_one_form_cartan_formula():
    X = VectorField(3, lambda x: jets.stack([x[1] * x[2], jets.sin(x[0]), 1.0 + x[0] * x[1]]), "X")
    alpha = OneFormField(3, lambda x: jets.stack([x[2] ** 2, x[0] * x[1], jets.exp(x[1])]), "alpha")
    x = np.array([0.4, -0.6, 0.3])
    # L_X alpha = d(alpha(X)) + i_X d alpha
    contraction = lambda y: alpha(y) @ X(y)
    d_alpha = exterior_derivative_1form(alpha, x)
    oracle = fd.gradient(contraction, x) + X(x) @ d_alpha
    np.testing.assert_allclose(lie_derivative(X, alpha, x), oracle, atol=1e-8)


def test_rotation_is_killing_and_dilation_is_not():
    rot = VectorField(3, lambda x: jets.stack([-x[1], x[0], 0.0 * x[2]]), "rot")
    dil = VectorField(3, lambda x: jets.stack([x[0], x[1], x[2]]), "dil")
    g = flat_metric(3)
    x = np.array([0.3, 0.2, -0.5])
    assert np.max(np.abs(lie_derivative(rot, g, x))) == 0.0
    np.testing.assert_allclose(lie_derivative(dil, g, x), 2 * np.eye(3))


def test_lie_derivative_shape_errors():
    g = flat_metric(3)
    with pytest.raises(ShapeError):
        lie_derivative(VectorField(2, lambda x: x, "v2"), g, np.zeros(3))
    with pytest.raises(ShapeError):
        lie_derivative(VectorField(3, lambda x: x, "v"), VectorField(3, lambda x: x, "w"), np.zeros(3))


def test_exterior_derivative_of_exact_form_vanishes():
    # df for f = x0 x1^2 + sin x2
    df = OneFormField(3, lambda x: jets.stack([x[1] ** 2, 2 * x[0] * x[1], jets.cos(x[2])]), "df")
    assert np.max(np.abs(exterior_derivative_1form(df, np.array([0.1, 0.7, -0.4])))) < 1e-14


def test_laplacian_sign_convention():
    x = np.array([0.3, -0.2, 0.5])
    r2 = ScalarField(3, lambda y: (y * y).sum(), "r2")
    assert laplace_beltrami(flat_metric(3), r2, x) == pytest.approx(-6.0)


def test_sphere_coordinate_function_is_eigenfunction():
    # restriction of an ambient linear function to S^n has Delta f = n f
    n = 3
    f = ScalarField(n, lambda u: inverse_stereographic(u)[n], "height")
    for u in ([0.2, 0.1, -0.4], [1.3, -0.2, 0.6]):
        u = np.array(u)
        assert laplace_beltrami(sphere_chart_metric(n), f, u) == pytest.approx(n * f(u), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(pts3)
def test_gram_schmidt_is_orthonormal(x):
    G = bumpy_metric()(x)
    v = np.array([1.0, x[0], x[1] - 0.2])
    u = v / np.sqrt(v @ G @ v)
    E = gram_schmidt(G, u)
    np.testing.assert_allclose(E.T @ G @ E, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(E[:, 0], u)


def test_adapted_frame_requires_unit_vector():
    g = flat_metric(3)
    with pytest.raises(PreconditionError):
        adapted_frame(g, np.zeros(3), np.array([1.0, 1.0, 0.0]))
    fr = adapted_frame(g, np.zeros(3), np.array([0.0, 0.6, 0.8]))
    np.testing.assert_allclose(fr.vectors.T @ fr.vectors, np.eye(3), atol=1e-14)


def test_singular_metric_raises():
    g = MetricField(2, lambda x: np.ones((2, 2)), "deg")
    with pytest.raises(SingularMetricError):
        christoffel(g, np.zeros(2))


def test_musical_round_trip():
    g = bumpy_metric()
    x = np.array([0.1, 0.2, 0.3])
    v = np.array([0.5, -1.0, 2.0])
    np.testing.assert_allclose(musical(g, x, musical(g, x, v), to="sharp"), v)
    with pytest.raises(ValueError):
        musical(g, x, v, to="sideways")
