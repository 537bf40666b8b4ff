import numpy as np
import pytest

from harmorph import gallery
from harmorph.errors import DomainError, ShapeError
from harmorph.kernel import fd, jets
from harmorph.kernel.fields import ScalarField, flat_metric
from harmorph.kernel.tensors import laplace_beltrami
from harmorph.morphisms import (
    SmoothMap,
    dilation,
    energy_density,
    harmonic_morphism_residual,
    hwc_residual,
    perturbed,
    pullback_metric,
    tension_field,
)
from harmorph.verify import sample_points


def _fd_christoffel(g, x):
    dg = fd.gradient(g, x)
    low = 0.5 * (np.einsum("dcb->dbc", dg) + dg - np.einsum("bcd->dbc", dg))
    d = len(x)
    return np.linalg.solve(g(x), low.reshape(d, -1)).reshape(d, d, d)


def fd_tension(phi, g, h, x):
    """Tension from nested finite differences and FD Christoffel symbols only."""
    J = fd.gradient(phi, x)  # J[i, a]
    H = fd.hessian(phi, x)  # H[i, a, b]
    y = phi(x)
    hess = H - np.einsum("cab,ic->iab", _fd_christoffel(g, x), J) + np.einsum(
        "ijk,ja,kb->iab", _fd_christoffel(h, y), J, J
    )
    return np.einsum("ab,iab->i", np.linalg.inv(g(x)), hess)


def test_tension_of_non_harmonic_map_matches_fd_oracle():
    b = gallery.sphere_umbilic(3)
    phi = perturbed(b.map, 0.3)
    for x in ([0.4, 0.3, -0.2, 0.6], [0.9, -0.5, 0.1, 0.2]):
        x = np.array(x)
        tau = tension_field(phi, b.g, b.h, x)
        assert np.linalg.norm(tau) > 1e-2
        np.testing.assert_allclose(tau, fd_tension(phi, b.g, b.h, x), atol=2e-4)


def test_tension_is_minus_laplacian_for_flat_target():
    g = gallery.sphere_chart_metric(3)
    f = lambda u: jets.stack([u[0] * u[1] + jets.sin(u[2])])
    phi = SmoothMap(3, 1, f, "f")
    x = np.array([0.2, -0.5, 0.3])
    lap = laplace_beltrami(g, ScalarField(3, lambda u: f(u)[0], "f0"), x)
    assert tension_field(phi, g, flat_metric(1), x)[0] == pytest.approx(-lap, abs=1e-12)


@pytest.mark.parametrize("name", sorted(gallery.BUNDLES))
def test_gallery_bundles_are_harmonic_morphisms(name):
    b = gallery.BUNDLES[name]()
    for p in sample_points(b.region, 15, 3, b.name, 0.05):
        r = harmonic_morphism_residual(b.map, b.g, b.h, p.coords)
        assert r.max_residual() < 1e-7
        assert not r.degenerate


@pytest.mark.parametrize("name", sorted(gallery.BUNDLES))
def test_perturbation_is_detected(name):
    b = gallery.BUNDLES[name]()
    phi = perturbed(b.map, 0.05)
    worst = max(
        harmonic_morphism_residual(phi, b.g, b.h, p.coords).max_residual()
        for p in sample_points(b.region, 15, 3, b.name, 0.05)
    )
    assert worst > 1e-3


def test_quadratic_map_pulls_back_harmonic_functions():
    b = gallery.quadratic_r4_r3()
    x = np.array([0.3, -0.7, 0.5, 0.2])
    # linear functions on R^3 are harmonic; so are their pullbacks
    for c in np.eye(3):
        f = ScalarField(4, lambda y, c=c: sum(c[i] * b.map.fn(y)[i] for i in range(3)), "pulled")
        assert abs(laplace_beltrami(b.g, f, x)) < 1e-12
    # a non-harmonic polynomial pulled back is not
    f = ScalarField(4, lambda y: b.map.fn(y)[0] ** 2, "sq")
    assert abs(laplace_beltrami(b.g, f, x)) > 1e-2


def test_quadratic_dilation_is_radius():
    b = gallery.quadratic_r4_r3()
    x = np.array([0.3, -0.7, 0.5, 0.2])
    assert dilation(b.map, b.g, b.h, x) == pytest.approx(np.linalg.norm(x), rel=1e-12)
    assert energy_density(b.map, b.g, b.h, x) == pytest.approx(3 * (x @ x), rel=1e-12)


def test_hopf_dilation_constant_two():
    b = gallery.hopf()
    vals = [dilation(b.map, b.g, b.h, p.coords) for p in sample_points(b.region, 20, 1, "hopf", 0.05)]
    assert np.ptp(vals) < 1e-8
    assert vals[0] == pytest.approx(2.0, abs=1e-10)


def test_non_conformal_linear_map_has_hwc_defect():
    phi = SmoothMap(3, 2, lambda x: jets.stack([2.0 * x[0], x[1]]), "stretch")
    defect, R = hwc_residual(phi, flat_metric(3), flat_metric(2), np.zeros(3))
    assert R == pytest.approx(2.5)
    np.testing.assert_allclose(defect, np.diag([1.5, -1.5]))
    r = harmonic_morphism_residual(phi, flat_metric(3), flat_metric(2), np.zeros(3))
    assert r.tension_norm == 0.0 and r.hwc_norm > 1


def test_constant_map_flags_degenerate():
    phi = SmoothMap(3, 2, lambda x: jets.stack([0.0 * x[0], 0.0 * x[1]]), "const")
    r = harmonic_morphism_residual(phi, flat_metric(3), flat_metric(2), np.ones(3))
    assert r.degenerate and r.max_residual() == 0.0


def test_pullback_matches_jacobian_product():
    b = gallery.radial_projection(3)
    x = np.array([0.3, 0.4, -0.5, 0.1])
    J = fd.gradient(b.map, x)
    np.testing.assert_allclose(pullback_metric(b.map, b.h, x), J.T @ b.h(b.map(x)) @ J, atol=1e-8)


def test_shape_and_domain_errors():
    b = gallery.radial_projection(3)
    with pytest.raises(ShapeError):
        harmonic_morphism_residual(b.map, flat_metric(3), b.h, np.ones(3))
    with pytest.raises(DomainError):
        b.map(np.zeros(4))
    with pytest.raises(ShapeError):
        b.map(np.ones(3))
