"""3D Shepp-Logan phantom, analytic projection/Radon oracles and interior masks.

The ellipsoid table is a mirror-symmetrized variant of the classic 10-ellipsoid
3D Shepp-Logan head phantom (Kak & Slaney lineage): the two large inner voids
and the two small bottom ellipsoids are exact mirror pairs about the x = 0
plane, so vol(x, y, z) == vol(-x, y, z) holds exactly on symmetric grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class Ellipsoid:
    """Axis-aligned ellipsoid rotated about z, with additive density."""

    center: tuple[float, float, float]
    semi_axes: tuple[float, float, float]
    phi_deg: float
    density: float

    def __post_init__(self):
        if min(self.semi_axes) <= 0:
            raise ValueError("semi-axes must be positive")

    def rotation(self) -> np.ndarray:
        """World-from-body rotation matrix (about z)."""
        c = np.cos(np.deg2rad(self.phi_deg))
        s = np.sin(np.deg2rad(self.phi_deg))
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


#: Mirror-symmetric 10-ellipsoid table on the [-1, 1]^3 support cube.
SHEPP_LOGAN_3D: tuple[Ellipsoid, ...] = (
    Ellipsoid((0.0, 0.0, 0.0), (0.69, 0.92, 0.81), 0.0, 1.0),
    Ellipsoid((0.0, -0.0184, 0.0), (0.6624, 0.874, 0.78), 0.0, -0.8),
    Ellipsoid((0.22, 0.0, 0.0), (0.135, 0.36, 0.25), -18.0, -0.2),
    Ellipsoid((-0.22, 0.0, 0.0), (0.135, 0.36, 0.25), 18.0, -0.2),
    Ellipsoid((0.0, 0.35, -0.15), (0.21, 0.25, 0.41), 0.0, 0.1),
    Ellipsoid((0.0, 0.1, 0.25), (0.046, 0.046, 0.05), 0.0, 0.1),
    Ellipsoid((0.0, -0.1, 0.25), (0.046, 0.046, 0.05), 0.0, 0.1),
    Ellipsoid((-0.07, -0.605, 0.0), (0.046, 0.023, 0.05), 0.0, 0.1),
    Ellipsoid((0.0, -0.606, 0.0), (0.023, 0.023, 0.02), 0.0, 0.1),
    Ellipsoid((0.07, -0.605, 0.0), (0.046, 0.023, 0.05), 0.0, 0.1),
)


@dataclass
class Volume3D:
    """Cubic voxel grid with a physical voxel pitch."""

    data: np.ndarray  # shape (N, N, N), indexed [ix, iy, iz]
    voxel_mm: float

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or len(set(self.data.shape)) != 1:
            raise ValueError("volume must be cubic (N, N, N)")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("volume contains non-finite values")
        if self.voxel_mm <= 0:
            raise ValueError("voxel_mm must be positive")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def extent_mm(self) -> float:
        return self.n * self.voxel_mm


def voxel_centers(n: int) -> np.ndarray:
    """Voxel-center coordinates on [-1, 1], symmetric about 0."""
    return -1.0 + (np.arange(n) + 0.5) * (2.0 / n)


def shepp_logan_3d(n: int, voxel_mm: float = 1.0,
                   ellipsoids: tuple[Ellipsoid, ...] = SHEPP_LOGAN_3D) -> Volume3D:
    """Sample the phantom at voxel centers of an N^3 grid spanning [-1, 1]^3."""
    if n < 8:
        raise ValueError("n must be >= 8")
    c = voxel_centers(n)
    x, y, z = np.meshgrid(c, c, c, indexing="ij")
    pts = np.stack([x, y, z], axis=-1)
    vol = np.zeros((n, n, n))
    for e in ellipsoids:
        q = (pts - np.array(e.center)) @ e.rotation()  # body coords
        r2 = (q[..., 0] / e.semi_axes[0]) ** 2 \
            + (q[..., 1] / e.semi_axes[1]) ** 2 \
            + (q[..., 2] / e.semi_axes[2]) ** 2
        vol[r2 <= 1.0] += e.density
    return Volume3D(vol, voxel_mm)


def analytic_line_integral(point: np.ndarray, direction: np.ndarray,
                           ellipsoids: tuple[Ellipsoid, ...] = SHEPP_LOGAN_3D) -> float | np.ndarray:
    """Sum of density * chord length over ellipsoids, closed form.

    ``point``/``direction`` may be single 3-vectors or (M, 3) batches;
    directions must be unit length so chord lengths come out in the same
    units as ``point``.
    """
    single = np.asarray(point).ndim == 1 and np.asarray(direction).ndim == 1
    p = np.atleast_2d(np.asarray(point, dtype=np.float64))
    d = np.atleast_2d(np.asarray(direction, dtype=np.float64))
    total = np.zeros(max(p.shape[0], d.shape[0]))
    for e in ellipsoids:
        rot = e.rotation()
        ax = np.array(e.semi_axes)
        q = ((p - np.array(e.center)) @ rot) / ax
        u = (d @ rot) / ax
        a = np.sum(u * u, axis=-1)
        b = np.sum(q * u, axis=-1)
        cc = np.sum(q * q, axis=-1) - 1.0
        disc = b * b - a * cc
        hit = disc > 0
        chord = np.where(hit, 2.0 * np.sqrt(np.maximum(disc, 0.0)) / np.maximum(a, 1e-300), 0.0)
        total = total + e.density * chord
    return float(total[0]) if single else total


def _plane_normal(theta, phi):
    st = np.sin(theta)
    return np.stack([np.cos(phi) * st, np.sin(phi) * st, np.cos(theta) * np.ones_like(phi)], axis=-1)


def analytic_plane_integral(rho, theta, phi,
                            ellipsoids: tuple[Ellipsoid, ...] = SHEPP_LOGAN_3D) -> np.ndarray:
    """Plane integral (3D Radon value) at signed distance rho, normal (theta, phi).

    For each ellipsoid the plane integral reduces affinely to the unit-ball
    case pi * (1 - s^2), scaled by abc / w with w the support half-width of
    the ellipsoid along the plane normal.
    """
    rho, theta, phi = np.broadcast_arrays(
        np.asarray(rho, dtype=np.float64),
        np.asarray(theta, dtype=np.float64),
        np.asarray(phi, dtype=np.float64))
    n = _plane_normal(theta, phi)
    out = np.zeros(rho.shape)
    for e in ellipsoids:
        rot = e.rotation()
        ax = np.array(e.semi_axes)
        nb = n @ rot
        w = np.sqrt(np.sum((nb * ax) ** 2, axis=-1))
        s = (rho - n @ np.array(e.center)) / w
        abc = ax[0] * ax[1] * ax[2]
        inside = np.abs(s) < 1.0
        out = out + np.where(inside, e.density * np.pi * abc * (1.0 - s * s) / w, 0.0)
    return out


def analytic_derivative_radon(rho, theta, phi,
                              ellipsoids: tuple[Ellipsoid, ...] = SHEPP_LOGAN_3D) -> np.ndarray:
    """d/drho of the plane integral; -2*pi*rho*A for a unit ball of density A."""
    rho, theta, phi = np.broadcast_arrays(
        np.asarray(rho, dtype=np.float64),
        np.asarray(theta, dtype=np.float64),
        np.asarray(phi, dtype=np.float64))
    n = _plane_normal(theta, phi)
    out = np.zeros(rho.shape)
    for e in ellipsoids:
        rot = e.rotation()
        ax = np.array(e.semi_axes)
        nb = n @ rot
        w = np.sqrt(np.sum((nb * ax) ** 2, axis=-1))
        s = (rho - n @ np.array(e.center)) / w
        abc = ax[0] * ax[1] * ax[2]
        inside = np.abs(s) < 1.0
        out = out + np.where(inside, -2.0 * np.pi * abc * e.density * s / (w * w), 0.0)
    return out


def smooth_ball_line_integral(point, direction, center=(0.0, 0.0, 0.0),
                              radius: float = 1.0, density: float = 1.0):
    """Line integral of the C1 bump density*(1 - r^2/R^2)^2 inside radius R.

    Closed form 16*density*L^5 / (15*R^4) with L the half chord length.
    ``point``/``direction`` may be (M, 3) batches; directions unit length.
    """
    p = np.atleast_2d(np.asarray(point, dtype=np.float64)) - np.asarray(center)
    d = np.atleast_2d(np.asarray(direction, dtype=np.float64))
    b = np.sum(p * d, axis=-1)
    d2 = np.sum(p * p, axis=-1) - b * b
    half = np.sqrt(np.maximum(radius ** 2 - d2, 0.0))
    return 16.0 * density * half ** 5 / (15.0 * radius ** 4)


def smooth_ball_derivative_radon(rho, theta, phi, center=(0.0, 0.0, 0.0),
                                 radius: float = 1.0, density: float = 1.0):
    """d/drho plane integral of the same bump: -2*pi*density*s*(1-s^2/R^2)^2."""
    rho, theta, phi = np.broadcast_arrays(
        np.asarray(rho, dtype=np.float64),
        np.asarray(theta, dtype=np.float64),
        np.asarray(phi, dtype=np.float64))
    s = rho - _plane_normal(theta, phi) @ np.asarray(center, dtype=np.float64)
    inside = np.abs(s) < radius
    val = -2.0 * np.pi * density * s * (1.0 - s ** 2 / radius ** 2) ** 2
    return np.where(inside, val, 0.0)


def smooth_ball_volume(n: int, voxel_mm: float, radius_mm: float,
                       density: float = 1.0, center_mm=(0.0, 0.0, 0.0)) -> Volume3D:
    """Voxelized bump phantom matching the smooth-ball analytic oracles."""
    c = (np.arange(n) - n / 2.0 + 0.5) * voxel_mm
    x, y, z = np.meshgrid(c - center_mm[0], c - center_mm[1], c - center_mm[2],
                          indexing="ij")
    r2 = (x * x + y * y + z * z) / radius_mm ** 2
    return Volume3D(density * np.maximum(1.0 - r2, 0.0) ** 2, voxel_mm)


def interior_mask(data: np.ndarray, erosion: int, threshold: float = 0.0) -> np.ndarray:
    """Support mask of `data` eroded by `erosion` samples.

    Works for a 3D volume grid or a (n_views, nu, nv) projection stack;
    projection stacks are eroded per view in the detector plane.
    """
    if erosion < 0:
        raise ValueError("erosion must be >= 0")
    support = np.abs(np.asarray(data)) > threshold
    if erosion == 0:
        return support
    if support.ndim == 3 and len(set(support.shape)) == 1:
        return ndimage.binary_erosion(support, iterations=erosion)
    # projection stack: erode within each view only
    struct = np.zeros((1, 3, 3), dtype=bool)
    struct[0] = ndimage.generate_binary_structure(2, 1)
    return ndimage.binary_erosion(support, structure=struct, iterations=erosion)
