"""Phantom tests: voxelization, analytic oracles vs. numerical quadrature,
smooth-ball phantom and interior masks."""

import numpy as np
import pytest

from cbnufft.phantom import (SHEPP_LOGAN_3D, Ellipsoid, Volume3D,
                             analytic_derivative_radon, analytic_line_integral,
                             analytic_plane_integral, interior_mask,
                             shepp_logan_3d, smooth_ball_derivative_radon,
                             smooth_ball_line_integral, smooth_ball_volume,
                             voxel_centers)


def test_ellipsoid_validation():
    with pytest.raises(ValueError):
        Ellipsoid((0, 0, 0), (1.0, -1.0, 1.0), 0.0, 1.0)


def test_volume_validation():
    with pytest.raises(ValueError):
        Volume3D(np.zeros((4, 4, 5)), 1.0)
    with pytest.raises(ValueError):
        Volume3D(np.zeros((4, 4, 4)), -1.0)
    with pytest.raises(ValueError):
        Volume3D(np.full((4, 4, 4), np.nan), 1.0)


def test_voxel_centers_symmetric():
    c = voxel_centers(16)
    assert np.allclose(c, -c[::-1])
    assert c[0] == pytest.approx(-1.0 + 1.0 / 16)


def test_shepp_logan_mirror_symmetry():
    vol = shepp_logan_3d(32)
    assert np.array_equal(vol.data, vol.data[::-1])  # vol(x,...) == vol(-x,...)


def test_shepp_logan_density_range():
    vol = shepp_logan_3d(32)
    assert vol.data.max() <= 1.0 + 1e-12
    assert vol.data.min() >= -1e-12
    # head interior (background 1.0 minus 0.8 ventricle region) present
    assert np.any(np.isclose(vol.data, 0.2))


def test_line_integral_matches_quadrature():
    rng = np.random.default_rng(3)
    for _ in range(10):
        p = np.array([rng.uniform(-3, -2), rng.uniform(-0.5, 0.5),
                      rng.uniform(-0.5, 0.5)])
        d = np.array([1.0, rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)])
        d /= np.linalg.norm(d)
        ref = analytic_line_integral(p, d)
        taus = np.linspace(0, 8, 80001)
        pts = p[None, :] + taus[:, None] * d[None, :]
        dens = np.zeros(taus.size)
        for e in SHEPP_LOGAN_3D:
            q = (pts - np.array(e.center)) @ e.rotation()
            r2 = np.sum((q / np.array(e.semi_axes)) ** 2, axis=-1)
            dens += np.where(r2 <= 1.0, e.density, 0.0)
        num = np.trapezoid(dens, taus)
        assert abs(num - ref) < 2e-3 * max(abs(ref), 0.1)


def test_plane_integral_matches_quadrature():
    rng = np.random.default_rng(4)
    for _ in range(5):
        theta = rng.uniform(0.2, np.pi - 0.2)
        phi = rng.uniform(0, 2 * np.pi)
        rho = rng.uniform(-0.5, 0.5)
        ref = analytic_plane_integral(rho, theta, phi)
        # dense 2D quadrature over the plane patch covering the unit ball
        n = np.array([np.cos(phi) * np.sin(theta), np.sin(phi) * np.sin(theta),
                      np.cos(theta)])
        a = np.array([-np.sin(phi), np.cos(phi), 0.0])
        b = np.cross(n, a)
        s = np.linspace(-1.3, 1.3, 901)
        h = s[1] - s[0]
        aa, bb = np.meshgrid(s, s, indexing="ij")
        pts = rho * n + aa.ravel()[:, None] * a + bb.ravel()[:, None] * b
        dens = np.zeros(pts.shape[0])
        for e in SHEPP_LOGAN_3D:
            q = (pts - np.array(e.center)) @ e.rotation()
            r2 = np.sum((q / np.array(e.semi_axes)) ** 2, axis=-1)
            dens += np.where(r2 <= 1.0, e.density, 0.0)
        num = dens.sum() * h * h
        assert abs(num - ref) < 5e-3 * max(abs(float(ref)), 0.1)


def test_derivative_radon_is_rho_derivative():
    rng = np.random.default_rng(5)
    theta = rng.uniform(0.2, np.pi - 0.2, 20)
    phi = rng.uniform(0, 2 * np.pi, 20)
    rho = rng.uniform(-0.6, 0.6, 20)
    h = 1e-5
    num = (analytic_plane_integral(rho + h, theta, phi)
           - analytic_plane_integral(rho - h, theta, phi)) / (2 * h)
    ana = analytic_derivative_radon(rho, theta, phi)
    assert np.max(np.abs(num - ana)) < 1e-4 * max(1.0, np.max(np.abs(ana)))


def test_smooth_ball_line_integral_closed_form():
    # central chord of the unit bump: 16/15
    val = smooth_ball_line_integral(np.array([-3.0, 0.0, 0.0]),
                                    np.array([1.0, 0.0, 0.0]))
    assert val == pytest.approx(16.0 / 15.0)
    # numerical check on an off-center chord
    p = np.array([-3.0, 0.3, 0.2])
    d = np.array([1.0, 0.0, 0.0])
    taus = np.linspace(0, 6, 200001)
    pts = p[None, :] + taus[:, None] * d[None, :]
    r2 = np.sum(pts ** 2, axis=-1)
    dens = np.maximum(1.0 - r2, 0.0) ** 2
    assert abs(np.trapezoid(dens, taus)
               - smooth_ball_line_integral(p, d)) < 1e-8


def test_smooth_ball_derivative_radon_matches_difference_quotient():
    rng = np.random.default_rng(6)
    rho = rng.uniform(-0.8, 0.8, 30)
    theta = rng.uniform(0, np.pi, 30)
    phi = rng.uniform(0, 2 * np.pi, 30)
    # plane integral of the bump: pi/3 * (1 - s^2)^3 for radius 1
    h = 1e-6
    def plane(r):
        s = np.clip(r, -1, 1)
        return np.pi / 3.0 * np.maximum(1.0 - s ** 2, 0.0) ** 3
    num = (plane(rho + h) - plane(rho - h)) / (2 * h)
    ana = smooth_ball_derivative_radon(rho, theta, phi)
    assert np.max(np.abs(num - ana)) < 1e-5


def test_smooth_ball_volume_matches_density():
    n, voxel, radius = 24, 1.0, 8.0
    vol = smooth_ball_volume(n, voxel, radius, density=2.0)
    c = (np.arange(n) - n / 2.0 + 0.5) * voxel
    x, y, z = np.meshgrid(c, c, c, indexing="ij")
    r2 = (x * x + y * y + z * z) / radius ** 2
    assert np.allclose(vol.data, 2.0 * np.maximum(1 - r2, 0) ** 2)


def test_interior_mask_erosion():
    data = np.zeros((16, 16, 16))
    data[4:12, 4:12, 4:12] = 1.0
    m0 = interior_mask(data, 0)
    m2 = interior_mask(data, 2)
    assert m0.sum() == 8 ** 3
    assert m2.sum() == 4 ** 3
    assert np.all(m0[m2])
    with pytest.raises(ValueError):
        interior_mask(data, -1)


def test_interior_mask_projection_stack_per_view():
    stack = np.zeros((3, 16, 16))
    stack[:, 4:12, 4:12] = 1.0
    m = interior_mask(stack, 1)
    assert m.shape == stack.shape
    assert m[0].sum() == 6 * 6  # eroded within the view only
