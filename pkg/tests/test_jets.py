import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmorph.errors import ConfigError, ShapeError
from harmorph.kernel import fd, jets
from harmorph.kernel.jets import Jet

coords = st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3).map(np.array)


def f_scalar(x):
    return jets.sin(x[0] * x[1]) + jets.exp(0.3 * x[2]) * x[0] ** 3 / (2.0 + x[1] * x[1])


def f_vector(x):
    return jets.stack([jets.sqrt(1.5 + x[0] * x[2]), jets.log(2.0 + jets.cos(x[1])), jets.tanh(x[0] - x[2])])


def _jet_parts(f, x, order):
    return jets.as_jet(f(Jet.variable(x, order)), len(x), order).parts


def _fd_check(f, x, order):
    parts = _jet_parts(f, x, order)
    for k in range(1, order + 1):
        num = fd.gradient(lambda y: _jet_parts(f, y, k - 1)[k - 1], x)
        scale = max(1.0, float(np.max(np.abs(parts[k]))))
        assert np.max(np.abs(parts[k] - num)) / scale < 1e-5


@settings(max_examples=40, deadline=None)
@given(coords)
def test_scalar_jet_matches_finite_differences(x):
    _fd_check(f_scalar, x, 3)


@settings(max_examples=40, deadline=None)
@given(coords)
def test_vector_jet_matches_finite_differences(x):
    _fd_check(f_vector, x, 3)


def test_polynomial_derivatives_exact():
    # d/dx (x^2 y) = 2xy, d2/dxdy = 2x, d3/dx2dy = 2
    x = np.array([1.5, -2.0])
    p = Jet.variable(x, 3)
    j = p[0] * p[0] * p[1]
    assert j.value == pytest.approx(-4.5)
    np.testing.assert_allclose(j.parts[1], [2 * 1.5 * -2.0, 1.5**2])
    np.testing.assert_allclose(j.parts[2], [[2 * -2.0, 2 * 1.5], [2 * 1.5, 0.0]])
    assert j.parts[3][0, 0, 1] == pytest.approx(2.0)
    assert j.parts[3][0, 1, 0] == pytest.approx(2.0)
    assert j.parts[3][1, 1, 1] == 0.0


def test_higher_derivatives_symmetric():
    x = np.array([0.2, 0.4, -0.3])
    parts = _jet_parts(f_scalar, x, 3)
    np.testing.assert_allclose(parts[2], parts[2].T, atol=1e-14)
    for perm in [(1, 0, 2), (2, 1, 0), (0, 2, 1)]:
        np.testing.assert_allclose(parts[3], parts[3].transpose(perm), atol=1e-13)


def test_inverse_jet_matches_numpy():
    x = np.array([0.1, 0.3])
    p = Jet.variable(x, 2)
    A = jets.stack([jets.stack([2.0 + p[0], p[1]]), jets.stack([p[1], 3.0 - p[0] * p[1]])])
    Ainv = jets.inv(A)
    np.testing.assert_allclose(Ainv.value, np.linalg.inv(A.value), atol=1e-14)

    def inv_val(y):
        q = Jet.variable(y, 0)
        B = jets.stack([jets.stack([2.0 + q[0], q[1]]), jets.stack([q[1], 3.0 - q[0] * q[1]])])
        return np.linalg.inv(B.value)

    np.testing.assert_allclose(Ainv.parts[1], fd.gradient(inv_val, x), atol=1e-8)


def test_einsum_leibniz_matches_product_rule():
    x = np.array([0.5, -0.2, 0.7])
    p = Jet.variable(x, 2)
    a = jets.stack([p[0] * p[1], jets.sin(p[2]), p[0]])
    b = jets.stack([p[2], p[1] * p[1], 1.0 + p[0]])
    dot = jets.einsum("i,i->", a, b)
    manual = a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    for k in range(3):
        np.testing.assert_allclose(dot.parts[k], manual.parts[k], atol=1e-14)


def test_numpy_constants_defer_to_jet():
    p = Jet.variable(np.array([1.0, 2.0]), 1)
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = M * p[0]
    assert isinstance(out, Jet)
    np.testing.assert_allclose(out.parts[1][..., 0], M)


def test_division_and_powers():
    x = np.array([0.7, 1.3])
    p = Jet.variable(x, 3)
    j = (p[0] ** 2.5) / p[1]
    num = fd.gradient(lambda y: y[0] ** 2.5 / y[1], x)
    np.testing.assert_allclose(j.parts[1], num, rtol=1e-8)


def test_order_limit_and_ellipsis_rejected():
    with pytest.raises(ConfigError):
        Jet([np.zeros(2)] * 5, 2)
    p = Jet.variable(np.zeros(2), 1)
    with pytest.raises(ShapeError):
        p[...]
    with pytest.raises(ConfigError):
        Jet.variable(np.zeros(2), 0).grad()


def test_mismatched_dims_rejected():
    a = Jet.variable(np.zeros(2), 1)
    b = Jet.variable(np.zeros(3), 1)
    with pytest.raises(ShapeError):
        a[0] + b[0]
