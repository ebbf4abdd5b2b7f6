"""Fourier Slice Theorem operations on radially sampled spectra.

Each radial line (theta, phi) of the 3D spectrum is the 1D Fourier transform
of the plane-integral (Radon) profile along that direction.  All transforms
along rho are centered: index Nρ/2 carries frequency zero, matching the
symmetric rho grid of RadialGridSpec.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import RadialGridSpec, radial_nodes
from .nufft import plan_nufft, nufft_forward, nufft_forward_chunked, nufft_adjoint
from .phantom import Volume3D


@dataclass
class RadialSpectrum3D:
    """Fourier samples along radial lines, shape (n_rho, n_theta, n_phi)."""

    spec: RadialGridSpec
    data: np.ndarray

    def __post_init__(self):
        want = (self.spec.n_rho, self.spec.n_theta, self.spec.n_phi)
        if self.data.shape != want:
            raise ValueError(f"data shape {self.data.shape} != {want}")


@dataclass
class RadialRadon3D:
    """Derivative-of-Radon values on the radial lattice, same layout."""

    spec: RadialGridSpec
    data: np.ndarray

    def __post_init__(self):
        want = (self.spec.n_rho, self.spec.n_theta, self.spec.n_phi)
        if self.data.shape != want:
            raise ValueError(f"data shape {self.data.shape} != {want}")


def radial_omega(spec: RadialGridSpec) -> np.ndarray:
    """Signed radial frequencies conjugate to the centered rho grid."""
    k = np.arange(spec.n_rho) - spec.n_rho // 2
    return 2.0 * np.pi * k / (spec.n_rho * spec.delta_rho)


def _center_phase(nodes: np.ndarray, dims) -> np.ndarray:
    # refer the plain index-sum transform to voxel-center coordinates
    # c_d = i_d - N_d/2 + 1/2
    shift = np.array([n / 2.0 - 0.5 for n in dims])
    return np.exp(1j * (nodes @ shift))


def _radial_direction_nodes(spec: RadialGridSpec, voxel_mm: float) -> np.ndarray:
    """Radial node set in radians per voxel, rho fastest (unwrapped)."""
    omega = radial_omega(spec) * voxel_mm
    polar = radial_nodes(spec)  # (m, 3), rho fastest
    theta, phi = polar[:, 1], polar[:, 2]
    st = np.sin(theta)
    direction = np.stack([np.cos(phi) * st, np.sin(phi) * st, np.cos(theta)], axis=-1)
    w = omega[np.tile(np.arange(spec.n_rho), spec.n_theta * spec.n_phi)]
    return w[:, None] * direction


def _wrap_nodes(nodes: np.ndarray) -> np.ndarray:
    """Alias node coordinates into [-pi, pi); exact for the periodic DTFT."""
    return np.mod(nodes + np.pi, 2.0 * np.pi) - np.pi


def trilinear_transfer(spec: RadialGridSpec, voxel_mm: float) -> np.ndarray:
    """Spectrum of the trilinear voxel basis at the radial nodes.

    Multiplying the lattice DTFT samples by this separable sinc^2 factor
    (evaluated at the unwrapped physical frequencies) yields the exact
    spectrum of the trilinearly interpolated volume, the same continuous
    object the comparison ray-driven projector integrates.  Returned in
    the (n_rho, n_theta, n_phi) lattice layout.
    """
    nodes = _radial_direction_nodes(spec, voxel_mm)
    tr = np.prod(np.sinc(nodes / (2.0 * np.pi)), axis=-1) ** 2
    return tr.reshape(spec.n_phi, spec.n_theta, spec.n_rho).transpose(2, 1, 0)


def image_to_radial_spectrum(vol: Volume3D, spec: RadialGridSpec,
                             j=6, oversample_factor: float = 2.0) -> RadialSpectrum3D:
    """3D NUFFT of the volume at the radial node set.

    The rho axis of `spec` is in the same length unit as `vol.voxel_mm`;
    frequencies are converted to radians per voxel before planning.  Output
    values are plain voxel sums (no voxel-volume factor), so the node at
    rho index Nρ/2 equals the sum of all voxels.  Frequencies beyond the
    per-axis Nyquist limit are aliased into [-pi, pi) before planning,
    which evaluates the periodic lattice DTFT exactly; radial bands up to
    the Nyquist-cube corner sqrt(3)*pi/voxel are therefore valid.
    """
    n = vol.n
    nodes = _wrap_nodes(_radial_direction_nodes(spec, vol.voxel_mm))
    values = nufft_forward_chunked((n, n, n), nodes,
                                   vol.data.astype(np.complex128),
                                   oversample_factor, j)
    values *= _center_phase(nodes, (n, n, n))
    data = values.reshape(spec.n_phi, spec.n_theta, spec.n_rho).transpose(2, 1, 0)
    return RadialSpectrum3D(spec, data)


def spectral_rho_derivative(s: RadialSpectrum3D) -> RadialSpectrum3D:
    """Multiply each sample by i times its signed radial frequency."""
    omega = radial_omega(s.spec)
    return RadialSpectrum3D(s.spec, s.data * (1j * omega)[:, None, None])


def _centered_fft(x: np.ndarray, axis: int = 0) -> np.ndarray:
    return np.fft.fftshift(np.fft.fft(np.fft.ifftshift(x, axes=axis), axis=axis),
                           axes=axis)


def _centered_ifft(x: np.ndarray, axis: int = 0) -> np.ndarray:
    return np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(x, axes=axis), axis=axis),
                           axes=axis)


def radial_fft(r: RadialRadon3D) -> RadialSpectrum3D:
    """Centered 1D FFT along rho with the Delta-rho quadrature factor."""
    return RadialSpectrum3D(r.spec, _centered_fft(np.asarray(r.data, dtype=np.complex128))
                            * r.spec.delta_rho)


def radial_ifft(s: RadialSpectrum3D) -> RadialRadon3D:
    """Exact inverse of radial_fft (profile values on the rho grid)."""
    return RadialRadon3D(s.spec, _centered_ifft(s.data) / s.spec.delta_rho)


def ramp_weights(n_rho: int, delta_rho: float, n_theta: int, dimension: int,
                 n_phi: int = 1) -> np.ndarray:
    """Per-rho-bin filter weights including the quadrature constant.

    2D: c|w| with c = (angular step * frequency step) / (2 pi)^2.
    3D: c w^2 with the spherical-quadrature constant (the sin(theta)
    solid-angle factor is applied by the caller, not here).
    The zero-frequency bin gets a quarter of the first nonzero weight.
    """
    if dimension not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    omega = 2.0 * np.pi * (np.arange(n_rho) - n_rho // 2) / (n_rho * delta_rho)
    if dimension == 2:
        c = 1.0 / (2.0 * n_theta * n_rho * delta_rho)
        w = c * np.abs(omega)
    else:
        c = 1.0 / (4.0 * n_theta * n_phi * n_rho * delta_rho)
        w = c * omega ** 2
    dw = 2.0 * np.pi / (n_rho * delta_rho)
    w[n_rho // 2] = 0.25 * (c * dw if dimension == 2 else c * dw ** 2)
    return w


def ramp_filter_radial(s: RadialSpectrum3D, dimension: int) -> RadialSpectrum3D:
    """Apply the ramp weights along the rho axis of a radial spectrum."""
    w = ramp_weights(s.spec.n_rho, s.spec.delta_rho, s.spec.n_theta, dimension,
                     s.spec.n_phi)
    return RadialSpectrum3D(s.spec, s.data * w[:, None, None])


def image_to_radial_spectrum_2d(image: np.ndarray, n_rho: int, n_theta: int,
                                j=6, oversample_factor: float = 2.0) -> np.ndarray:
    """2D NUFFT of a square image onto n_theta radial lines of n_rho samples.

    Returns a complex (n_rho, n_theta) grid; rho is in pixel units with
    delta_rho = 2 * (image size) / n_rho, covering the full Nyquist band
    when n_rho >= 2N.
    """
    image = np.asarray(image)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise ValueError("image must be square")
    n = image.shape[0]
    delta_rho = 2.0 * n / n_rho
    omega = 2.0 * np.pi * (np.arange(n_rho) - n_rho // 2) / (n_rho * delta_rho)
    theta = np.arange(n_theta) * np.pi / n_theta
    ww, tt = np.meshgrid(omega, theta, indexing="ij")
    nodes = np.stack([(ww * np.cos(tt)).ravel(), (ww * np.sin(tt)).ravel()], axis=-1)
    plan = plan_nufft((n, n), nodes, oversample_factor, j)
    values = nufft_forward(plan, image.astype(np.complex128))
    values *= _center_phase(nodes, (n, n))
    return values.reshape(n_rho, n_theta)


def fbp2d_nufft(spectrum: np.ndarray, out_size: int,
                j=6, oversample_factor: float = 2.0):
    """Filtered backprojection from a 2D radial spectrum.

    `spectrum` is (n_rho, n_theta) as produced by image_to_radial_spectrum_2d
    for an out_size image.  Returns (image, imaginary_residual_ratio) where
    the ratio is ||imag|| / ||real|| of the pre-projection result.
    """
    spectrum = np.asarray(spectrum, dtype=np.complex128)
    n_rho, n_theta = spectrum.shape
    n = int(out_size)
    delta_rho = 2.0 * n / n_rho
    omega = 2.0 * np.pi * (np.arange(n_rho) - n_rho // 2) / (n_rho * delta_rho)
    theta = np.arange(n_theta) * np.pi / n_theta
    ww, tt = np.meshgrid(omega, theta, indexing="ij")
    nodes = np.stack([(ww * np.cos(tt)).ravel(), (ww * np.sin(tt)).ravel()], axis=-1)
    w = ramp_weights(n_rho, delta_rho, n_theta, 2)
    y = (spectrum * w[:, None]).ravel() * np.conj(_center_phase(nodes, (n, n)))
    plan = plan_nufft((n, n), nodes, oversample_factor, j)
    grid = nufft_adjoint(plan, y)
    real_norm = np.linalg.norm(grid.real)
    imag_ratio = np.linalg.norm(grid.imag) / max(real_norm, 1e-300)
    return grid.real.copy(), imag_ratio
