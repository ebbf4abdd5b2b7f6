"""Sampling-rate calculators, the angular-sampling sweep, and error metrics.

The rate formulas follow the classical Nyquist account of sinogram sampling:
a signal supported on [-x_max, x_max] band-limited to |w| <= w_max needs
sample spacing pi/w_max, and the angular direction of a sinogram needs
about pi times as many samples as the radial one.  The sweep experiment
reconstructs an image from radial-line spectra at increasing angular rates
and locates the error plateau with a deterministic 2% rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .radon_fourier import fbp2d_nufft, image_to_radial_spectrum_2d


@dataclass
class SamplingRates:
    """Sinogram sampling rates for one band-limit budget."""

    n_rho: int
    n_theta: int
    delta_rho: float
    delta_theta: float
    n_phi: int | None = None

    def __post_init__(self):
        if self.n_rho <= 0 or self.n_theta <= 0:
            raise ValueError("sample counts must be positive")
        if self.delta_rho <= 0 or self.delta_theta <= 0:
            raise ValueError("sample spacings must be positive")
        if self.n_phi is not None and self.n_phi <= 0:
            raise ValueError("n_phi must be positive")


@dataclass
class SweepResult:
    """Angular-sweep error curve and its plateau estimate."""

    points: list  # (n_theta, mean abs error per pixel), n_theta increasing
    plateau: int

    def __post_init__(self):
        n = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(n, n[1:])):
            raise ValueError("n_theta values must be strictly increasing")


def nyquist_rates(x_max: float, w_max: float) -> tuple[float, float]:
    """Sample spacing and count for support [-x_max, x_max], band w_max.

    delta_x = pi / w_max and N_x = 2 * x_max * w_max / pi (the count is the
    support length divided by the spacing; it is returned unrounded).
    """
    if x_max <= 0 or w_max <= 0:
        raise ValueError("x_max and w_max must be positive")
    delta_x = np.pi / w_max
    return delta_x, 2.0 * x_max * w_max / np.pi


def sinogram_rates(x_max: float, w_max: float,
                   hexagonal: bool = False) -> SamplingRates:
    """Radial/angular rates for a sinogram of the same band budget.

    N_rho = N_x, N_theta = ceil(pi * N_x), delta_theta = pi/(x_max*w_max + 1).
    With ``hexagonal=True`` the packing trade-off variant is returned
    instead: both counts equal 2 * N_x (the angular count is traded down to
    the doubled radial count).
    """
    delta_x, n_x = nyquist_rates(x_max, w_max)
    n_rho = int(round(n_x))
    delta_theta = np.pi / (x_max * w_max + 1.0)
    if hexagonal:
        return SamplingRates(2 * n_rho, 2 * n_rho, delta_x / 2.0,
                             np.pi / (2 * n_rho))
    return SamplingRates(n_rho, int(np.ceil(np.pi * n_x)), delta_x, delta_theta)


def inscribed_disk_mask(n: int) -> np.ndarray:
    """Pixels inside the inscribed disk of an n x n image."""
    c = np.arange(n) - n / 2.0 + 0.5
    xx, yy = np.meshgrid(c, c, indexing="ij")
    return xx ** 2 + yy ** 2 <= (n / 2.0) ** 2


def masked_error_metrics(a: np.ndarray, b: np.ndarray, mask: np.ndarray):
    """(mean abs per pixel, RMSE, max abs) of a - b over mask-true pixels."""
    a = np.asarray(a)
    b = np.asarray(b)
    mask = np.asarray(mask, dtype=bool)
    if a.shape != b.shape or a.shape != mask.shape:
        raise ValueError("a, b and mask must share one shape")
    if not mask.any():
        raise ValueError("mask selects no elements")
    d = (a - b)[mask]
    return float(np.mean(np.abs(d))), float(np.sqrt(np.mean(d ** 2))), \
        float(np.max(np.abs(d)))


def angular_sweep(image: np.ndarray, n_theta_list, n_rho: int) -> SweepResult:
    """Reconstruction error versus angular sampling rate.

    For each N_theta the image is mapped to its radial-line spectrum by a
    2D NUFFT and reconstructed by filtered backprojection from those lines;
    the recorded error is the mean absolute per-pixel difference over the
    inscribed disk.  The plateau is the smallest N_theta whose error is
    within 2% of the error at the largest N_theta.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise ValueError("image must be square")
    n_theta_list = sorted(int(v) for v in n_theta_list)
    n = image.shape[0]
    mask = inscribed_disk_mask(n)
    points = []
    for n_theta in n_theta_list:
        spectrum = image_to_radial_spectrum_2d(image, n_rho, n_theta)
        recon, _ = fbp2d_nufft(spectrum, n)
        err, _, _ = masked_error_metrics(recon, image, mask)
        points.append((n_theta, err))
    terminal = points[-1][1]
    plateau = next(nt for nt, err in points if err <= 1.02 * terminal)
    return SweepResult(points, plateau)


def zero_corner_frequencies(image: np.ndarray) -> np.ndarray:
    """Remove spectral content outside the inscribed frequency disk.

    Radial-line sampling only covers frequencies up to the per-axis Nyquist
    radius; the square's corner frequencies are never sampled.  Zeroing
    them beforehand removes the part of the image no radial sweep can
    represent.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise ValueError("image must be square")
    n = image.shape[0]
    # integer frequency coordinates (no half-pixel offset): the mask must be
    # symmetric under frequency negation or the real part reintroduces the
    # zeroed corners
    k = np.arange(n) - n // 2
    kx, ky = np.meshgrid(k, k, indexing="ij")
    keep = kx ** 2 + ky ** 2 <= (n / 2.0) ** 2
    f = np.fft.fftshift(np.fft.fft2(image))
    f[~keep] = 0.0
    return np.real(np.fft.ifft2(np.fft.ifftshift(f)))
