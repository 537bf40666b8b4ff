import numpy as np
import pytest

from harmorph import gallery
from harmorph.foliation import vertical_field
from harmorph.kernel.tensors import constant_curvature_deviation
from harmorph.verify import sample_points


def test_stereographic_round_trip_and_sphere():
    u = np.array([0.3, -1.2, 0.7])
    y = gallery.inverse_stereographic(u)
    assert y @ y == pytest.approx(1.0)
    np.testing.assert_allclose(gallery.stereographic(y), u, atol=1e-14)


def test_hopf_fibres_are_circles_of_constant_image():
    b = gallery.hopf()
    x = np.array([0.2, -0.4, 0.3])
    u = vertical_field(b.map, b.g)
    y0 = b.map(x)
    # an RK4 walk along the fibre stays on the same image point
    z, h = x.copy(), 1e-2
    for _ in range(50):
        k1 = u(z)
        k2 = u(z + h / 2 * k1)
        k3 = u(z + h / 2 * k2)
        k4 = u(z + h * k3)
        z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    assert np.linalg.norm(z - x) > 0.1
    np.testing.assert_allclose(b.map(z), y0, atol=1e-8)


def test_hopf_image_on_unit_sphere():
    b = gallery.hopf()
    for p in sample_points(b.region, 10, 0, "hopf", 0.05):
        w = gallery.inverse_stereographic(b.map(p.coords))
        assert w @ w == pytest.approx(1.0)


def test_sphere_umbilic_matches_ambient_formula():
    b = gallery.sphere_umbilic(3)
    u = np.array([0.4, 0.2, -0.3, 0.5])
    y = gallery.inverse_stereographic(u)
    ambient = y[:4] / np.sqrt(1 - y[4] ** 2)
    np.testing.assert_allclose(gallery.inverse_stereographic(b.map(u)), ambient, atol=1e-14)


@pytest.mark.parametrize("name", sorted(gallery.BUNDLES))
def test_bundle_metrics_have_declared_curvature(name):
    b = gallery.BUNDLES[name]()
    p = sample_points(b.region, 1, 5, b.name, 0.05)[0].coords
    assert constant_curvature_deviation(b.g, p, b.g.constant_curvature) < 1e-7
    assert constant_curvature_deviation(b.h, b.map(p), b.h.constant_curvature) < 1e-7


def test_region_exclusions():
    b = gallery.radial_projection(3)
    assert not b.region.contains(np.zeros(4))
    assert not b.region.contains(np.array([0, 0, 0, 0.5]))  # pole guard
    assert b.region.contains(np.array([0.5, 0.1, 0.2, 0.1]))


def test_catalog_and_registry():
    assert len(gallery.all_bundles()) == len(gallery.BUNDLES)
    assert [b.name for b in gallery.all_bundles()] == sorted(gallery.BUNDLES)
    assert gallery.quadratic_r4_r3().killing is not None
