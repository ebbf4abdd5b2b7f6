"""End-to-end NUFFT cone-beam operators and the complexity model.

Forward projector: volume -> radial derivative-Radon lattice (Fourier
route) -> umbrella resampling (method A or B) -> per-view reverse Grangeat
-> detector frames.  Backprojector runs the transposed chain with a
spectral rho^2 filter.  The complexity model exposes the closed-form
per-step multiplication counts and an instrumented counter that measures
the same steps from actually constructed plans.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import ConeGeometry, RadialGridSpec, radial_nodes, umbrella_coordinates
from .grangeat import (DetectorFrame, UmbrellaView, forward_grangeat_view,
                       plan_grangeat, reverse_grangeat_view)
from .nufft import plan_nufft, nufft_adjoint, nufft_adjoint_chunked
from .phantom import Volume3D, smooth_ball_line_integral, smooth_ball_volume
from .radon_fourier import (RadialRadon3D, _center_phase, _wrap_nodes,
                            image_to_radial_spectrum, radial_fft, radial_ifft,
                            radial_omega, spectral_rho_derivative,
                            trilinear_transfer)
from .resampling import plan_resample, polar_index_map, resample_apply, resample_transpose

_TARGET_BATCH = 1 << 20  # umbrella targets per resampling plan (memory bound)


@dataclass
class ProjectorConfig:
    """Settings for the NUFFT forward projector / backprojector."""

    method: str                       # "a" or "b"
    radial_spec: RadialGridSpec
    n_mu: int
    n_t: int
    t_pitch_mm: float | None = None   # umbrella t pitch (None: virtual pixel)
    t_taper: str = "hann"             # reverse-Grangeat band-edge window
    spectrum_j: int = 3               # 3D spectrum NUFFT neighbourhood
    resample_j: tuple = (3, 3, 3)     # method A neighbourhood
    side_lobes: int = 2               # method B window
    oversample_factor: float = 2.0
    rho_pad: int | None = None
    basis: str = "trilinear"          # voxel basis: "trilinear" or "dirac"
    normalization: float = 1.0
    bp_normalization: float = 1.0
    den_tol: float = 1e-3             # vacancy threshold for the transpose

    def __post_init__(self):
        if self.method.lower() not in ("a", "b"):
            raise ValueError("method must be 'a' or 'b'")
        self.method = self.method.lower()
        if self.basis not in ("trilinear", "dirac"):
            raise ValueError("basis must be 'trilinear' or 'dirac'")


def make_projector_config(geom: ConeGeometry, n: int, method: str = "a",
                          **overrides) -> ProjectorConfig:
    """Practical-rate defaults: Ntheta = Nphi = 2N, umbrella 2*nu lines.

    The radial band extends 1.5x past the Nyquist-cube corner (delta_rho =
    voxel / (1.5*sqrt(3))), covering the full spectrum of the trilinear
    object model along every direction with headroom for the umbrella
    resampling; rho_max = sqrt(3)/2 * extent (the cube half-diagonal)
    supports every plane that intersects the volume, giving Nrho = 4.5N
    offsets.  The t grid runs at third-pixel pitch over twice the virtual
    detector width, so reverse Grangeat point-samples a band three times
    the detector Nyquist, with a Hann taper at the band edge.
    """
    n_rho = 2 * int(np.ceil(4.5 * n / 2.0))
    spec = RadialGridSpec(n_rho, 2 * n, 2 * n,
                          float(geom.object_extent_mm) * np.sqrt(3.0) / 2.0)
    cfg = ProjectorConfig(method, spec, n_mu=2 * geom.nu, n_t=6 * geom.nu,
                          t_pitch_mm=geom.virtual_pixel_mm[0] / 3.0,
                          rho_pad=min(n_rho // 8, 32))
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg


def _umbrella_targets(geom: ConeGeometry, cfg: ProjectorConfig,
                      views: range | None = None):
    """Fractional radial-lattice indices of the given views' umbrella nodes.

    Returns (indices, valid): umbrella planes with |rho| beyond the cube
    half-diagonal cannot intersect the volume, so their derivative-Radon
    value is identically zero; they are pinned to the origin node and
    masked out instead of resampled.
    """
    if views is None:
        views = range(geom.n_views)
    rows = []
    for k in views:
        rho, theta, phi = umbrella_coordinates(geom, k, cfg.n_mu, cfg.n_t,
                                               cfg.t_pitch_mm)
        rows.append(np.stack([rho.ravel(), theta.ravel(), phi.ravel()], axis=-1))
    coords = np.concatenate(rows, axis=0)
    valid = np.abs(coords[:, 0]) <= cfg.radial_spec.rho_max * (1.0 + 1e-12)
    coords[~valid] = 0.0
    return polar_index_map(coords, cfg.radial_spec), valid


def _view_batches(geom: ConeGeometry, cfg: ProjectorConfig):
    """Split the view range so each batch stays under _TARGET_BATCH targets."""
    per_view = cfg.n_mu * cfg.n_t
    step = max(1, _TARGET_BATCH // per_view)
    return [range(lo, min(lo + step, geom.n_views))
            for lo in range(0, geom.n_views, step)]


def _radial_lattice(vol: Volume3D, cfg: ProjectorConfig) -> np.ndarray:
    """Derivative-Radon values on the radial lattice (complex)."""
    spectrum = image_to_radial_spectrum(vol, cfg.radial_spec, j=cfg.spectrum_j,
                                        oversample_factor=cfg.oversample_factor)
    if cfg.basis == "trilinear":
        spectrum.data *= trilinear_transfer(cfg.radial_spec, vol.voxel_mm)
    return radial_ifft(spectral_rho_derivative(spectrum)).data


def nufft_forward_project(vol: Volume3D, geom: ConeGeometry,
                          cfg: ProjectorConfig) -> list[DetectorFrame]:
    """NUFFT-based cone-beam forward projection (all views)."""
    lattice = _radial_lattice(vol, cfg)
    gp = plan_grangeat(geom, cfg.n_mu, cfg.n_t, t_pitch_mm=cfg.t_pitch_mm,
                       t_taper=cfg.t_taper)
    frames = []
    per_view = cfg.n_mu * cfg.n_t
    for batch in _view_batches(geom, cfg):
        targets, valid = _umbrella_targets(geom, cfg, batch)
        rplan = plan_resample(cfg.radial_spec, targets, cfg.method,
                              rho_pad=cfg.rho_pad, j=cfg.resample_j,
                              oversample_factor=cfg.oversample_factor,
                              side_lobes=cfg.side_lobes)
        values = np.real(resample_apply(rplan, lattice))
        values[~valid] = 0.0
        del rplan
        for i, k in enumerate(batch):
            vals = values[i * per_view:(i + 1) * per_view].reshape(cfg.n_mu, cfg.n_t)
            coords = umbrella_coordinates(geom, k, cfg.n_mu, cfg.n_t, cfg.t_pitch_mm)
            frame = reverse_grangeat_view(UmbrellaView(k, vals, coords), gp)
            frame.data *= cfg.normalization
            if not np.all(np.isfinite(frame.data)):
                raise FloatingPointError(f"non-finite projection values in view {k}")
            frames.append(frame)
    return frames


def nufft_backproject(frames: list[DetectorFrame], geom: ConeGeometry,
                      cfg: ProjectorConfig, out_size: int,
                      voxel_mm: float) -> Volume3D:
    """Direct NUFFT backprojection (transposed chain with rho^2 filtering)."""
    if len(frames) != geom.n_views:
        raise ValueError("frame count does not match the geometry")
    # The forward Grangeat direction reads the detector's spectrum, which
    # carries nothing beyond the detector Nyquist band; sampling t finer
    # than the virtual pixel would evaluate aliased spectrum values and
    # amplify them with the derivative ramp.  Likewise the reconstruction
    # ramp is rolled off at the output grid's Nyquist-cube corner, so a
    # radial band past the corner only adds transpose noise and memory.
    # The transpose therefore runs on a detector-matched t grid and a
    # corner-matched radial band regardless of the forward-path rates.
    extent = out_size * voxel_mm
    bp_spec = RadialGridSpec(2 * int(np.ceil(1.5 * out_size / 2.0)),
                             cfg.radial_spec.n_theta, cfg.radial_spec.n_phi,
                             extent * np.sqrt(3.0) / 2.0)
    cfg = replace(cfg, n_t=2 * geom.nu, t_pitch_mm=None, radial_spec=bp_spec,
                  rho_pad=min(bp_spec.n_rho // 8, 32))
    gp = plan_grangeat(geom, cfg.n_mu, cfg.n_t, t_pitch_mm=cfg.t_pitch_mm)
    spec = cfg.radial_spec
    num = np.zeros((spec.n_rho, spec.n_theta, spec.n_phi), dtype=np.complex128)
    den = np.zeros((spec.n_rho, spec.n_theta, spec.n_phi))
    for batch in _view_batches(geom, cfg):
        vals = np.concatenate([
            forward_grangeat_view(frames[k], gp).values.ravel() for k in batch])
        targets, valid = _umbrella_targets(geom, cfg, batch)
        vals = np.where(valid, vals, 0.0)
        rplan = plan_resample(spec, targets, cfg.method, rho_pad=cfg.rho_pad,
                              j=cfg.resample_j,
                              oversample_factor=cfg.oversample_factor,
                              side_lobes=cfg.side_lobes)
        num += resample_transpose(rplan, vals.astype(np.complex128))
        den += np.real(resample_transpose(rplan, valid.astype(np.complex128)))
        del rplan
    del gp
    keep = den > cfg.den_tol * den.max()
    lattice = np.where(keep, num / np.where(keep, den, 1.0), 0.0)
    s_hat = radial_fft(RadialRadon3D(spec, lattice)).data  # ~ i*omega*R_hat
    omega = radial_omega(spec)
    c3 = 1.0 / (4.0 * spec.n_theta * spec.n_phi * spec.n_rho * spec.delta_rho)
    # Hann-apodized reconstruction ramp, rolled off at the voxel Nyquist
    # cube corner: the target volume has no spectrum past the corner, and
    # an unapodized ramp amplifies transpose noise near the band edge.
    omega_corner = np.pi * np.sqrt(3.0) / voxel_mm
    apod = np.cos(np.pi * np.minimum(np.abs(omega) / omega_corner, 1.0) / 2.0) ** 2
    s_hat *= (-1j * omega * apod * c3)[:, None, None]      # -> omega^2 * R_hat * c3
    s_hat *= np.sin(spec.theta_values)[None, :, None]      # solid-angle factor
    if cfg.basis == "trilinear":
        s_hat *= trilinear_transfer(spec, voxel_mm)
    # back onto the voxel grid through the 3D NUFFT adjoint
    omega_vox = radial_omega(spec) * voxel_mm
    polar = radial_nodes(spec)
    theta, phi = polar[:, 1], polar[:, 2]
    st = np.sin(theta)
    direction = np.stack([np.cos(phi) * st, np.sin(phi) * st, np.cos(theta)], axis=-1)
    w = omega_vox[np.tile(np.arange(spec.n_rho), spec.n_theta * spec.n_phi)]
    nodes = _wrap_nodes(w[:, None] * direction)
    y = s_hat.transpose(2, 1, 0).ravel() * np.conj(_center_phase(nodes, (out_size,) * 3))
    grid = nufft_adjoint_chunked((out_size,) * 3, nodes, y,
                                 cfg.oversample_factor, cfg.spectrum_j)
    return Volume3D(np.real(grid) * cfg.bp_normalization, voxel_mm)


def calibrate_normalization(geom: ConeGeometry, n: int, cfg: ProjectorConfig,
                            voxel_mm: float) -> float:
    """Forward-projector scale factor fitted on an analytic smooth ball.

    Least-squares ratio between the closed-form projection of the C1 bump
    phantom and the projector's view-0 output; stores and returns it.
    """
    radius = 0.28 * n * voxel_mm
    vol = smooth_ball_volume(n, voxel_mm, radius)
    cfg.normalization = 1.0
    frame = nufft_forward_project(vol, geom, cfg)[0]
    s = geom.source_position(0)
    pu, pv = geom.pixel_mm
    u = (np.arange(geom.nu) - geom.nu / 2.0 + 0.5) * pu
    v = (np.arange(geom.nv) - geom.nv / 2.0 + 0.5) * pv
    uu, vv = np.meshgrid(u, v, indexing="ij")
    a = geom.view_angle(0)
    s_hat = np.array([np.cos(a), np.sin(a), 0.0])
    u_hat = np.array([-np.sin(a), np.cos(a), 0.0])
    v_hat = np.array([0.0, 0.0, 1.0])
    pts = (s - geom.sd_mm * s_hat)[None, :] \
        + uu.ravel()[:, None] * u_hat + vv.ravel()[:, None] * v_hat
    d = pts - s
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    ref = smooth_ball_line_integral(np.broadcast_to(s, d.shape), d, radius=radius)
    got = frame.data.ravel()
    cfg.normalization = float(np.dot(ref, got) / np.dot(got, got))
    return cfg.normalization


def calibrate_bp_normalization(geom: ConeGeometry, n: int, cfg: ProjectorConfig,
                               voxel_mm: float) -> float:
    """Backprojector scale fitted on the smooth ball via the baseline projector."""
    from .baseline import ct_project_linear
    radius = 0.28 * n * voxel_mm
    vol = smooth_ball_volume(n, voxel_mm, radius)
    frames = ct_project_linear(vol, geom)
    cfg.bp_normalization = 1.0
    rec = nufft_backproject(frames, geom, cfg, n, voxel_mm)
    mask = vol.data > 0.05
    cfg.bp_normalization = float(np.dot(vol.data[mask], rec.data[mask])
                                 / np.dot(rec.data[mask], rec.data[mask]))
    return cfg.bp_normalization


# --- complexity model ------------------------------------------------------

_STEP_COEFF = {
    # name: (L coefficient, N^3 coefficient), L = N^3 log2 N
    "c1a": (24.0, 299.47),
    "c1b": (0.0, 9.87),
    "c1c": (4.93, 0.0),
    "c21": (48.0, 340.34),
    "c22": (0.0, 266.48),
    "c3a": (0.0, 9.87),
    "c3b": (4.93, 0.0),
    "c3c": (12.56, 339.28),
    "c3d": (0.0, np.pi),
}

_VARIANT_STEPS = {
    "method_a": ("c1a", "c1b", "c1c", "c21", "c3a", "c3b", "c3c", "c3d"),
    "method_b": ("c1a", "c1b", "c1c", "c22", "c3a", "c3b", "c3c", "c3d"),
}


@dataclass
class CostModel:
    """Per-step multiplication counts for one projector variant."""

    n: int
    variant: str
    steps: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(sum(self.steps.values()))


def predicted_cost(n: int, variant: str) -> CostModel:
    """Closed-form multiplication counts (log base 2).

    method_a total = 94.42*N^3*log N + 1001.98*N^3, method_b total =
    46.42*N^3*log N + 928.12*N^3, ct_baseline = 8*N^3 * pi*N = 25.13*N^4.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if variant == "ct_baseline":
        return CostModel(n, variant, {"c3": 8.0 * n ** 3 * np.pi * n})
    if variant not in _VARIANT_STEPS:
        raise ValueError(f"unknown variant {variant!r}")
    big_l = n ** 3 * np.log2(n)
    steps = {s: _STEP_COEFF[s][0] * big_l + _STEP_COEFF[s][1] * n ** 3
             for s in _VARIANT_STEPS[variant]}
    return CostModel(n, variant, steps)


def _fft_mults(total_size: int) -> float:
    return 0.5 * total_size * np.log2(total_size)


def count_multiplications(n: int, variant: str) -> CostModel:
    """Measured multiplication counts from actually constructed plans.

    Uses the theoretical sampling rates (Nrho = N, Ntheta = Nphi =
    ceil(pi*N); umbrella ceil(pi*N) views x ceil(pi*N) lines x N offsets).
    The resampling plan for method A is instrumented at oversample 1 with
    no rho padding so the FFT grid matches the closed-form accounting.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(0)
    if variant == "ct_baseline":
        from .baseline import ct_project_linear
        geom = ConeGeometry(so_mm=40.0 * n, sd_mm=60.0 * n,
                            det_width_mm=4.0 * n, det_height_mm=4.0 * n,
                            nu=n, nv=n, n_views=4, object_extent_mm=2.0 * n)
        counter: dict = {}
        ct_project_linear(Volume3D(np.zeros((n, n, n)), 2.0), geom, counter=counter)
        return CostModel(n, variant, {"c3": float(counter["mults"])})
    if variant not in _VARIANT_STEPS:
        raise ValueError(f"unknown variant {variant!r}")
    n_ang = int(np.ceil(np.pi * n))
    m_lattice = n * n_ang * n_ang
    m_targets = n_ang * n_ang * n       # views x lines x offsets
    steps: dict = {}
    # step 1: 3D NUFFT of the N^3 volume at the radial nodes
    nodes = rng.uniform(-np.pi, np.pi, (m_lattice, 3))
    plan = plan_nufft((n, n, n), nodes, 2.0, 3)
    steps["c1a"] = _fft_mults(int(np.prod(plan.k_dims))) + n ** 3 \
        + float(plan.interp.weights.size)
    steps["c1b"] = float(m_lattice)
    steps["c1c"] = n_ang * n_ang * 0.5 * n * np.log2(n)
    # step 2: resampling at the umbrella targets
    spec = RadialGridSpec(n, n_ang, n_ang, 1.0)
    targets = rng.uniform(0, 1, (m_targets, 3)) * np.array([n, n_ang, n_ang])
    if variant == "method_a":
        rplan = plan_resample(spec, targets, "a", rho_pad=0, j=(3, 3, 3),
                              oversample_factor=1.0)
        k_tot = int(np.prod(rplan.nufft_plan.k_dims))
        steps["c21"] = _fft_mults(m_lattice) + m_lattice \
            + _fft_mults(k_tot) + float(rplan.nufft_plan.interp.weights.size)
    else:
        rplan = plan_resample(spec, targets, "b", rho_pad=0, side_lobes=2)
        taps = (rplan.side_lobes + 1) ** 3
        steps["c22"] = float(taps * m_targets)
    # step 3: per-view reverse Grangeat, ceil(pi*N) views
    steps["c3a"] = float(m_targets)
    steps["c3b"] = n_ang * n_ang * 0.5 * n * np.log2(n)
    nodes2 = rng.uniform(-np.pi, np.pi, (n_ang * n, 2))
    plan2 = plan_nufft((n, n), nodes2, 2.0, (5, 5))
    per_view = _fft_mults(int(np.prod(plan2.k_dims))) + n * n \
        + float(plan2.interp.weights.size)
    steps["c3c"] = n_ang * per_view
    steps["c3d"] = float(n_ang * n * n)
    return CostModel(n, variant, steps)
