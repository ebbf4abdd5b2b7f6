"""Reference cone-beam operators: linear-interpolation projector and FDK.

These are the comparison baselines: a ray-driven projector that samples the
volume by trilinear (8-neighbor) interpolation, and the standard FDK
filtered-backprojection reconstruction for circular trajectories.
"""

from __future__ import annotations

import numpy as np

from .geometry import ConeGeometry
from .grangeat import DetectorFrame
from .phantom import Volume3D
from .radon_fourier import _centered_fft, _centered_ifft

_RAY_CHUNK = 1 << 13


def detector_axes_physical(geom: ConeGeometry):
    """Physical detector pixel-center coordinates (u, v) in mm."""
    pu, pv = geom.pixel_mm
    u = (np.arange(geom.nu) - geom.nu / 2.0 + 0.5) * pu
    v = (np.arange(geom.nv) - geom.nv / 2.0 + 0.5) * pv
    return u, v


def _view_frame(geom: ConeGeometry, view_index: int):
    a = geom.view_angle(view_index)
    s_hat = np.array([np.cos(a), np.sin(a), 0.0])
    u_hat = np.array([-np.sin(a), np.cos(a), 0.0])
    v_hat = np.array([0.0, 0.0, 1.0])
    return s_hat, u_hat, v_hat


def _trilinear_gather(data: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Trilinear interpolation at fractional voxel indices (M, 3); 0 outside."""
    n = data.shape[0]
    lo = np.floor(idx).astype(np.int64)
    frac = idx - lo
    out = np.zeros(idx.shape[0])
    for corner in range(8):
        off = np.array([(corner >> a) & 1 for a in range(3)])
        node = lo + off
        w = np.prod(np.where(off, frac, 1.0 - frac), axis=-1)
        ok = np.all((node >= 0) & (node < n), axis=-1)
        nc = np.clip(node, 0, n - 1)
        out += np.where(ok, w * data[nc[:, 0], nc[:, 1], nc[:, 2]], 0.0)
    return out


def ct_project_linear(vol: Volume3D, geom: ConeGeometry,
                      counter: dict | None = None) -> list[DetectorFrame]:
    """Ray-driven cone-beam projection with trilinear volume sampling.

    Every ray takes exactly N samples spread uniformly over its chord
    through the volume cube (slab clipping), each scaled by the physical
    step length; rays missing the cube contribute zero.  When `counter`
    is given, 'mults' accumulates 8*N per ray (the 8-neighbor weighting),
    counting every ray of every view.
    """
    n = vol.n
    half = 0.5 * vol.extent_mm
    u, v = detector_axes_physical(geom)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    frames = []
    for k in range(geom.n_views):
        s_hat, u_hat, v_hat = _view_frame(geom, k)
        src = geom.so_mm * s_hat
        pts = (-geom.sd_mm * s_hat)[None, :] + src[None, :] \
            + uu.ravel()[:, None] * u_hat[None, :] + vv.ravel()[:, None] * v_hat[None, :]
        proj = np.empty(geom.nu * geom.nv)
        for lo_i in range(0, pts.shape[0], _RAY_CHUNK):
            hi_i = min(lo_i + _RAY_CHUNK, pts.shape[0])
            d = pts[lo_i:hi_i] - src
            d /= np.linalg.norm(d, axis=-1, keepdims=True)
            # slab intersection with the cube [-half, half]^3
            t0 = np.full(hi_i - lo_i, -np.inf)
            t1 = np.full(hi_i - lo_i, np.inf)
            for a in range(3):
                da = d[:, a]
                safe = np.where(np.abs(da) < 1e-300, 1e-300, da)
                ta = (-half - src[a]) / safe
                tb = (half - src[a]) / safe
                t0 = np.maximum(t0, np.minimum(ta, tb))
                t1 = np.minimum(t1, np.maximum(ta, tb))
            span = np.maximum(t1 - t0, 0.0)
            step = span / n
            # N midpoint samples along each clipped chord
            taus = t0[:, None] + (np.arange(n)[None, :] + 0.5) * step[:, None]
            p = src[None, None, :] + taus[:, :, None] * d[:, None, :]
            idx = p.reshape(-1, 3) / vol.voxel_mm + (n / 2.0 - 0.5)
            vals = _trilinear_gather(vol.data, idx).reshape(-1, n)
            proj[lo_i:hi_i] = np.sum(vals, axis=1) * step
        if counter is not None:
            counter["mults"] = counter.get("mults", 0) + 8 * n * geom.nu * geom.nv
        frames.append(DetectorFrame(k, proj.reshape(geom.nu, geom.nv), geom.pixel_mm))
    return frames


def ramp_filter_rows(data: np.ndarray, delta_u: float) -> np.ndarray:
    """Frequency-domain ramp filtering of detector rows (axis 0 = u).

    Returns (1/(4*pi)) * F^-1(|omega| * F(row)), the half-scan-weighted
    ramp with the angular-integration constant folded in; the
    zero-frequency weight is a quarter of the first nonzero one so
    constants are not annihilated.
    """
    nu = data.shape[0]
    omega = 2.0 * np.pi * (np.arange(nu) - nu // 2) / (nu * delta_u)
    w = np.abs(omega)
    w[nu // 2] = 0.25 * (2.0 * np.pi / (nu * delta_u))
    f = _centered_fft(data.astype(np.complex128), axis=0)
    return np.real(_centered_ifft(f * w[:, None], axis=0)) / (4.0 * np.pi)


def fdk_reconstruct(frames: list[DetectorFrame], geom: ConeGeometry,
                    out_size: int, voxel_mm: float) -> Volume3D:
    """FDK reconstruction: cosine weighting, row ramp, weighted backprojection."""
    if len(frames) != geom.n_views:
        raise ValueError("frame count does not match the geometry")
    u, v = detector_axes_physical(geom)
    pu, pv = geom.pixel_mm
    cosw = geom.sd_mm / np.sqrt(geom.sd_mm ** 2 + u[:, None] ** 2 + v[None, :] ** 2)
    c = (np.arange(out_size) - out_size / 2.0 + 0.5) * voxel_mm
    x, y, z = np.meshgrid(c, c, c, indexing="ij")
    out = np.zeros((out_size, out_size, out_size))
    dbeta = 2.0 * np.pi / geom.n_views
    for frame in frames:
        if frame.data.shape != (geom.nu, geom.nv):
            raise ValueError("frame dims do not match the geometry")
        # ramp in virtual-plane coordinates so amplitudes match the
        # origin-plane backprojection weighting below
        q = ramp_filter_rows(frame.data * cosw, pu / geom.magnification)
        s_hat, u_hat, v_hat = _view_frame(geom, frame.view_index)
        big_u = geom.so_mm - (x * s_hat[0] + y * s_hat[1])  # s_hat z comp is 0
        pux = x * u_hat[0] + y * u_hat[1]
        up = geom.sd_mm * pux / big_u
        vp = geom.sd_mm * z / big_u
        iu = up / pu + geom.nu / 2.0 - 0.5
        iv = vp / pv + geom.nv / 2.0 - 0.5
        lo_u = np.clip(np.floor(iu).astype(np.int64), 0, geom.nu - 2)
        lo_v = np.clip(np.floor(iv).astype(np.int64), 0, geom.nv - 2)
        fu = np.clip(iu - lo_u, 0.0, 1.0)
        fv = np.clip(iv - lo_v, 0.0, 1.0)
        inside = (iu > -1) & (iu < geom.nu) & (iv > -1) & (iv < geom.nv)
        val = (q[lo_u, lo_v] * (1 - fu) * (1 - fv)
               + q[lo_u + 1, lo_v] * fu * (1 - fv)
               + q[lo_u, lo_v + 1] * (1 - fu) * fv
               + q[lo_u + 1, lo_v + 1] * fu * fv)
        out += np.where(inside, val, 0.0) * (geom.so_mm ** 2 / big_u ** 2)
    return Volume3D(out * dbeta, voxel_mm)
