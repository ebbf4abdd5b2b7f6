"""On-disk formats: raw float volumes/projections with JSON sidecars, PGM.

Volumes are raw 32-bit little-endian floats in x-fastest order with a JSON
sidecar (``<path>.json``) describing dims, voxel pitch, dtype and order.
Projection stacks use u-fastest, then v, then view ordering and echo the
full acquisition geometry in their sidecar.  Both round-trip bit-exactly.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .geometry import ConeGeometry
from .grangeat import DetectorFrame
from .phantom import Volume3D

_GEOMETRY_FIELDS = ("so_mm", "sd_mm", "det_width_mm", "det_height_mm",
                    "nu", "nv", "n_views", "object_extent_mm")


def sidecar_path(path: str) -> str:
    return path + ".json"


def _load_sidecar(path: str) -> dict:
    try:
        with open(sidecar_path(path), "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValueError(f"missing sidecar {sidecar_path(path)}")
    except json.JSONDecodeError as e:
        raise ValueError(f"malformed sidecar {sidecar_path(path)}: {e}")


def _require(meta: dict, field: str):
    if field not in meta:
        raise ValueError(f"sidecar is missing field '{field}'")
    return meta[field]


def geometry_to_dict(geom: ConeGeometry) -> dict:
    return {f: getattr(geom, f) for f in _GEOMETRY_FIELDS}


def geometry_from_dict(meta: dict) -> ConeGeometry:
    return ConeGeometry(**{f: _require(meta, f) for f in _GEOMETRY_FIELDS})


def load_geometry(path: str) -> ConeGeometry:
    """Read an acquisition-geometry JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        raise ValueError(f"geometry file not found: {path}")
    except json.JSONDecodeError as e:
        raise ValueError(f"malformed geometry file {path}: {e}")
    try:
        return geometry_from_dict(meta)
    except TypeError as e:
        raise ValueError(f"bad geometry file {path}: {e}")


def save_geometry(path: str, geom: ConeGeometry) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(geometry_to_dict(geom), fh, indent=2)
        fh.write("\n")


def write_volume(path: str, vol: Volume3D) -> None:
    """Raw f32le payload, x index fastest, plus the JSON sidecar."""
    n = vol.n
    payload = np.ascontiguousarray(vol.data.transpose(2, 1, 0),
                                   dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(payload)
    meta = {"dims": [n, n, n], "voxel_mm": vol.voxel_mm,
            "dtype": "f32le", "order": "x-fastest"}
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def read_volume(path: str) -> Volume3D:
    meta = _load_sidecar(path)
    dims = _require(meta, "dims")
    if len(dims) != 3 or len(set(dims)) != 1:
        raise ValueError("sidecar field 'dims' must name a cubic volume")
    if _require(meta, "dtype") != "f32le":
        raise ValueError("sidecar field 'dtype' must be 'f32le'")
    if _require(meta, "order") != "x-fastest":
        raise ValueError("sidecar field 'order' must be 'x-fastest'")
    n = int(dims[0])
    want = 4 * n * n * n
    if os.path.getsize(path) != want:
        raise ValueError(f"payload size {os.path.getsize(path)} != dims "
                         f"product {want} (field 'dims')")
    raw = np.fromfile(path, dtype="<f4").reshape(n, n, n)  # [z, y, x]
    return Volume3D(raw.transpose(2, 1, 0).astype(np.float64),
                    float(_require(meta, "voxel_mm")))


def write_projections(path: str, frames: list[DetectorFrame],
                      geom: ConeGeometry) -> None:
    """Raw f32le payload, u fastest then v then view, with geometry echo."""
    if len(frames) != geom.n_views:
        raise ValueError("frame count does not match geometry field 'n_views'")
    stack = np.stack([f.data for f in frames])  # (view, u, v)
    if stack.shape != (geom.n_views, geom.nu, geom.nv):
        raise ValueError("frame dims do not match geometry fields 'nu'/'nv'")
    payload = np.ascontiguousarray(stack.transpose(0, 2, 1),
                                   dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(payload)
    meta = {"n_views": geom.n_views, "nu": geom.nu, "nv": geom.nv,
            "dtype": "f32le", "order": "u-fastest",
            "geometry": geometry_to_dict(geom)}
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def read_projections(path: str) -> tuple[list[DetectorFrame], ConeGeometry]:
    meta = _load_sidecar(path)
    geom = geometry_from_dict(_require(meta, "geometry"))
    n_views, nu, nv = (int(_require(meta, k)) for k in ("n_views", "nu", "nv"))
    if (n_views, nu, nv) != (geom.n_views, geom.nu, geom.nv):
        raise ValueError("sidecar fields 'n_views'/'nu'/'nv' disagree with "
                         "the geometry echo")
    if _require(meta, "dtype") != "f32le":
        raise ValueError("sidecar field 'dtype' must be 'f32le'")
    want = 4 * n_views * nu * nv
    if os.path.getsize(path) != want:
        raise ValueError(f"payload size {os.path.getsize(path)} != "
                         f"n_views*nu*nv*4 = {want}")
    raw = np.fromfile(path, dtype="<f4").reshape(n_views, nv, nu)
    frames = [DetectorFrame(k, raw[k].T.astype(np.float64), geom.pixel_mm)
              for k in range(n_views)]
    return frames, geom


def write_pgm16(path: str, image: np.ndarray,
                window: tuple[float, float] | None = None) -> None:
    """16-bit binary PGM of a 2D image, min-max windowed by default."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError("PGM export needs a 2D image")
    lo, hi = window if window is not None else (image.min(), image.max())
    if hi <= lo:
        hi = lo + 1.0
    q = np.clip((image - lo) / (hi - lo), 0.0, 1.0)
    pix = (q * 65535.0 + 0.5).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{image.shape[1]} {image.shape[0]}\n65535\n".encode())
        fh.write(pix.tobytes())
