"""Cone-beam geometry, polar coordinates and Radon-space sampling patterns.

Conventions
-----------
* Source circles the z axis: view ``k`` sits at azimuth ``phi_s = 2*pi*k/n_views``,
  position ``SO * (cos phi_s, sin phi_s, 0)``.
* All Radon-plane math lives on the *virtual* detector plane through the
  rotation axis (physical detector values scaled onto it by SO/SD).
* A plane is identified by its unit normal ``n(theta, phi)`` with elevation
  ``theta`` in [0, pi) and signed distance ``rho``; the antipodal pair
  ``(-rho, pi - theta, phi + pi)`` names the same plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConeGeometry:
    """Circular-trajectory cone-beam system (distances in mm)."""

    so_mm: float
    sd_mm: float
    det_width_mm: float
    det_height_mm: float
    nu: int
    nv: int
    n_views: int
    object_extent_mm: float

    def __post_init__(self):
        if self.so_mm <= 0:
            raise ValueError("so_mm must be positive")
        if self.sd_mm <= self.so_mm:
            raise ValueError("sd_mm must exceed so_mm")
        if min(self.nu, self.nv, self.n_views) < 1:
            raise ValueError("nu, nv and n_views must be >= 1")
        if self.object_extent_mm * np.sqrt(3.0) / 2.0 >= self.so_mm:
            raise ValueError("object does not fit inside the cone of every view")

    @property
    def magnification(self) -> float:
        return self.sd_mm / self.so_mm

    @property
    def pixel_mm(self) -> tuple[float, float]:
        """Physical detector pixel pitch (u, v)."""
        return self.det_width_mm / self.nu, self.det_height_mm / self.nv

    @property
    def virtual_pixel_mm(self) -> tuple[float, float]:
        """Pixel pitch of the detector scaled onto the plane through the origin."""
        pu, pv = self.pixel_mm
        return pu / self.magnification, pv / self.magnification

    def view_angle(self, view_index: int) -> float:
        return 2.0 * np.pi * view_index / self.n_views

    def source_position(self, view_index: int) -> np.ndarray:
        a = self.view_angle(view_index)
        return self.so_mm * np.array([np.cos(a), np.sin(a), 0.0])


@dataclass(frozen=True)
class PolarCoord:
    """Signed radial distance plus elevation/azimuth of the plane normal."""

    rho: float
    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta < np.pi):
            raise ValueError("theta must lie in [0, pi)")
        if not (0.0 <= self.phi < 2.0 * np.pi):
            raise ValueError("phi must lie in [0, 2*pi)")


@dataclass(frozen=True)
class RadialGridSpec:
    """Tensor grid over equispaced (rho, theta, phi)."""

    n_rho: int
    n_theta: int
    n_phi: int
    rho_max: float

    def __post_init__(self):
        if self.n_rho < 2 or self.n_rho % 2:
            raise ValueError("n_rho must be even and >= 2")
        if self.n_theta < 1 or self.n_phi < 1:
            raise ValueError("n_theta and n_phi must be >= 1")
        if self.rho_max <= 0:
            raise ValueError("rho_max must be positive")

    @property
    def rho_values(self) -> np.ndarray:
        """Equispaced, symmetric about 0; includes 0, excludes +rho_max."""
        k = np.arange(self.n_rho)
        return self.rho_max * (2.0 * k - self.n_rho) / self.n_rho

    @property
    def delta_rho(self) -> float:
        return 2.0 * self.rho_max / self.n_rho

    @property
    def theta_values(self) -> np.ndarray:
        return np.arange(self.n_theta) * np.pi / self.n_theta

    @property
    def phi_values(self) -> np.ndarray:
        return np.arange(self.n_phi) * 2.0 * np.pi / self.n_phi

    @property
    def size(self) -> int:
        return self.n_rho * self.n_theta * self.n_phi


def polar_to_cartesian(rho, theta, phi):
    """(x, y, z) of the point rho * n(theta, phi); accepts arrays."""
    rho = np.asarray(rho, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    st = np.sin(theta)
    x = rho * np.cos(phi) * st
    y = rho * np.sin(phi) * st
    z = rho * np.cos(theta)
    return x, y, z


def plane_normal(theta, phi) -> np.ndarray:
    """Unit normal(s) n(theta, phi), stacked on the last axis."""
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    st = np.sin(theta)
    return np.stack([np.cos(phi) * st, np.sin(phi) * st,
                     np.cos(theta) * np.ones_like(phi * theta)], axis=-1)


def canonical_polar(rho, theta, phi):
    """Wrap (rho, theta, phi) into theta in [0, pi), phi in [0, 2*pi).

    Uses the antipodal identity (rho, theta, phi) == (-rho, pi - theta,
    phi + pi): the returned triple names the same oriented plane.
    """
    rho = np.asarray(rho, dtype=np.float64).copy()
    n = plane_normal(theta, phi)
    flip = n[..., 2] < 0.0
    n = np.where(flip[..., None], -n, n)
    rho = np.where(flip, -rho, rho)
    nz = np.clip(n[..., 2], -1.0, 1.0)
    theta_c = np.arccos(nz)
    phi_c = np.mod(np.arctan2(n[..., 1], n[..., 0]), 2.0 * np.pi)
    # theta == pi cannot occur after the flip except for nz == -0.0 noise
    theta_c = np.where(theta_c >= np.pi, 0.0, theta_c)
    return rho, theta_c, phi_c


def radial_nodes(spec: RadialGridSpec) -> np.ndarray:
    """All (rho, theta, phi) lattice nodes, rho fastest, as an (n, 3) array."""
    rho = spec.rho_values
    theta = spec.theta_values
    phi = spec.phi_values
    pp, tt, rr = np.meshgrid(phi, theta, rho, indexing="ij")
    return np.stack([rr.ravel(), tt.ravel(), pp.ravel()], axis=-1)


def umbrella_line_grid(geom: ConeGeometry, n_mu: int, n_t: int,
                       t_pitch_mm: float | None = None):
    """(mu, t) line parameters on the virtual detector.

    Lines are equispaced in angle mu over [0, pi) and in offset t with
    pitch `t_pitch_mm` (default: the virtual pixel pitch).  A pitch below
    the pixel pitch refines the line-offset band beyond the detector
    Nyquist frequency without changing the grid's reach.
    """
    if n_mu < 1 or n_t < 1:
        raise ValueError("n_mu and n_t must be >= 1")
    mu = np.arange(n_mu) * np.pi / n_mu
    dt = geom.virtual_pixel_mm[0] if t_pitch_mm is None else float(t_pitch_mm)
    if dt <= 0:
        raise ValueError("t_pitch_mm must be positive")
    t = (np.arange(n_t) - n_t // 2) * dt
    return mu, t


def umbrella_coordinates(geom: ConeGeometry, view_index: int, n_mu: int, n_t: int,
                         t_pitch_mm: float | None = None):
    """Radon-plane coordinates of every umbrella line of one view.

    Returns (rho, theta, phi), each shaped (n_mu, n_t), with rho in mm.
    Each plane contains the source point and the virtual-detector line
    (mu, t); rho therefore always equals source . normal.
    """
    if not (0 <= view_index < geom.n_views):
        raise ValueError("view_index out of range")
    mu, t = umbrella_line_grid(geom, n_mu, n_t, t_pitch_mm)
    s = geom.source_position(view_index)
    phi_s = geom.view_angle(view_index)
    u_hat = np.array([-np.sin(phi_s), np.cos(phi_s), 0.0])
    v_hat = np.array([0.0, 0.0, 1.0])

    mu2 = mu[:, None]
    t2 = t[None, :]
    # in-plane line normal e(mu) and direction d(mu) on the virtual detector
    e = np.cos(mu2)[..., None] * u_hat + np.sin(mu2)[..., None] * v_hat
    d = -np.sin(mu2)[..., None] * u_hat + np.cos(mu2)[..., None] * v_hat
    p0 = t2[..., None] * e  # closest point of the line to the origin
    n = np.cross(p0 - s, np.broadcast_to(d, p0.shape))
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    rho = np.sum(n * s, axis=-1)
    theta = np.arccos(np.clip(n[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(n[..., 1], n[..., 0]), 2.0 * np.pi)
    return canonical_polar(rho, theta, phi)
