"""Per-view fast Grangeat processing between detector data and Radon space.

Forward direction: cone-beam detector frame -> derivative-Radon samples on
the view's umbrella lattice (all planes through the source point).
Reverse direction: umbrella derivative-Radon samples -> detector frame.

Both run on the virtual detector plane through the rotation axis.  A plane
is picked by a line (mu, t) on that plane; with source distance SO the
plane's signed offset is rho(t) = SO*t / sqrt(SO^2 + t^2) and the plane
normal is (t*s_hat + SO*e(mu)) / sqrt(SO^2 + t^2), whose z component
SO*sin(mu) is never negative for mu in [0, pi) -- the canonical polar
wrap never flips these planes, so no sign bookkeeping is needed.

The weight pair (pre-weight w1 on the detector, post-weight w2 on the line
offset) is validated against the analytic ellipsoid derivative-Radon
oracle rather than taken on faith; see the module tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ConeGeometry, umbrella_coordinates, umbrella_line_grid
from .nufft import NufftPlan, plan_nufft, nufft_forward, nufft_adjoint
from .radon_fourier import _center_phase, _centered_fft, _centered_ifft, _wrap_nodes


@dataclass
class UmbrellaView:
    """One view's derivative-Radon values on the (mu, t) umbrella lattice."""

    view_index: int
    values: np.ndarray            # (n_mu, n_t), real
    coords: tuple[np.ndarray, np.ndarray, np.ndarray]  # rho, theta, phi grids

    def __post_init__(self):
        if self.values.shape != self.coords[0].shape:
            raise ValueError("value grid and coordinate grids disagree")


@dataclass
class DetectorFrame:
    """One cone-beam projection: line integrals on the physical detector."""

    view_index: int
    data: np.ndarray              # (nu, nv), real
    pixel_mm: tuple[float, float]

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ValueError("detector data must be 2D")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("detector data contains non-finite values")


def detector_axes_virtual(geom: ConeGeometry):
    """Virtual-detector pixel-center coordinates (u, v) in mm."""
    pu, pv = geom.virtual_pixel_mm
    u = (np.arange(geom.nu) - geom.nu / 2.0 + 0.5) * pu
    v = (np.arange(geom.nv) - geom.nv / 2.0 + 0.5) * pv
    return u, v


def grangeat_preweight(geom: ConeGeometry) -> np.ndarray:
    """w1(u, v) = SO / sqrt(SO^2 + u^2 + v^2) on the virtual detector."""
    u, v = detector_axes_virtual(geom)
    return geom.so_mm / np.sqrt(geom.so_mm ** 2 + u[:, None] ** 2 + v[None, :] ** 2)


def grangeat_postweight(geom: ConeGeometry, t: np.ndarray) -> np.ndarray:
    """w2(t) = (SO^2 + t^2) / SO^2 for line offset t on the virtual detector."""
    return (geom.so_mm ** 2 + np.asarray(t) ** 2) / geom.so_mm ** 2


@dataclass
class GrangeatPlan:
    """Shared per-geometry state for forward/reverse Grangeat on every view."""

    geom: ConeGeometry
    n_mu: int
    n_t: int
    dt: float                     # t pitch, mm
    nufft_plan: NufftPlan
    center_phase: np.ndarray      # (n_mu * n_t,)
    omega: np.ndarray             # (n_t,), rad/mm along t
    w1: np.ndarray                # (nu, nv)
    w2: np.ndarray                # (n_t,)
    taper: np.ndarray             # (n_t,) reverse-direction band window


def plan_grangeat(geom: ConeGeometry, n_mu: int, n_t: int,
                  j=(5, 5), oversample_factor: float = 2.0,
                  t_pitch_mm: float | None = None,
                  t_taper: str = "none") -> GrangeatPlan:
    """Build the 2D NUFFT plan at the polar detector-plane frequency nodes.

    A t pitch below the virtual pixel pitch pushes the frequency nodes
    beyond the detector Nyquist band; they are aliased back into [-pi, pi),
    which is exact for data living on the integer pixel lattice and lets
    the reverse direction emulate point sampling of the wider-band signal.

    ``t_taper`` ("none" or "hann") apodizes the reverse-direction ramp at
    the t band edge.  With an oversampled t band the outermost frequencies
    carry mostly interpolation noise that the later reconstruction ramp
    amplifies; the Hann taper suppresses it at negligible cost to the
    in-band response.  The forward direction is never windowed.
    """
    mu, t = umbrella_line_grid(geom, n_mu, n_t, t_pitch_mm)
    pu, pv = geom.virtual_pixel_mm
    dt = pu if t_pitch_mm is None else float(t_pitch_mm)
    omega = 2.0 * np.pi * (np.arange(n_t) - n_t // 2) / (n_t * dt)
    ww, mm = np.meshgrid(omega, mu, indexing="ij")  # t-fastest after .T
    nodes_mm = np.stack([(ww * np.cos(mm)).T.ravel(),
                         (ww * np.sin(mm)).T.ravel()], axis=-1)
    nodes = _wrap_nodes(nodes_mm * np.array([pu, pv]))  # radians per sample
    plan = plan_nufft((geom.nu, geom.nv), nodes, oversample_factor, j)
    phase = _center_phase(nodes, (geom.nu, geom.nv))
    if t_taper == "hann":
        taper = np.cos(np.pi * omega / (2.0 * np.abs(omega).max())) ** 2
    elif t_taper == "none":
        taper = np.ones(n_t)
    else:
        raise ValueError("t_taper must be 'none' or 'hann'")
    return GrangeatPlan(geom, n_mu, n_t, dt, plan, phase, omega,
                        grangeat_preweight(geom), grangeat_postweight(geom, t),
                        taper)


def forward_grangeat_view(frame: DetectorFrame, gp: GrangeatPlan) -> UmbrellaView:
    """Detector frame -> umbrella derivative-Radon samples (one view)."""
    geom = gp.geom
    if frame.data.shape != (geom.nu, geom.nv):
        raise ValueError("frame dims do not match the geometry")
    pu, pv = geom.virtual_pixel_mm
    h = frame.data * gp.w1
    # slice theorem on the virtual detector: FT of h at omega*e(mu) equals
    # the 1D FT over t of the line-integral profile S(mu, .)
    s_hat = nufft_forward(gp.nufft_plan, h.astype(np.complex128))
    s_hat = (s_hat * gp.center_phase * (pu * pv)).reshape(gp.n_mu, gp.n_t)
    s_hat *= 1j * gp.omega[None, :]
    ds = _centered_ifft(s_hat, axis=1) / gp.dt  # dS/dt on the t grid
    values = np.real(ds) * gp.w2[None, :]
    coords = umbrella_coordinates(geom, frame.view_index, gp.n_mu, gp.n_t, gp.dt)
    return UmbrellaView(frame.view_index, values, coords)


def reverse_grangeat_view(view: UmbrellaView, gp: GrangeatPlan) -> DetectorFrame:
    """Umbrella derivative-Radon samples -> detector frame (one view).

    The zero-frequency content of each line profile is annihilated by the
    derivative weighting; it is restored by forcing the reconstructed frame
    to zero mean on the outermost detector ring, which the object shadow
    must not reach.
    """
    geom = gp.geom
    if view.values.shape != (gp.n_mu, gp.n_t):
        raise ValueError("umbrella grid does not match the plan")
    pu, pv = geom.virtual_pixel_mm
    ds = view.values / gp.w2[None, :]
    s_hat = _centered_fft(ds.astype(np.complex128), axis=1) * gp.dt  # i*omega*S
    c2 = 1.0 / (2.0 * gp.n_mu * gp.n_t * gp.dt)
    y = s_hat * (-1j * np.sign(gp.omega) * gp.taper)[None, :] * c2  # |omega|*S * c2
    h = nufft_adjoint(gp.nufft_plan, y.ravel() * np.conj(gp.center_phase))
    g = np.real(h) / gp.w1
    ring = np.zeros((geom.nu, geom.nv), dtype=bool)
    ring[0], ring[-1], ring[:, 0], ring[:, -1] = True, True, True, True
    g = g - np.mean(g[ring])
    return DetectorFrame(view.view_index, g, geom.pixel_mm)
