"""Command-line harness: phantom | project | backproject | fdk | sweep |
complexity | compare.

Exit codes: 0 success, 2 validation error (bad flags, malformed files,
dimension mismatches), 3 numerical failure (non-finite values produced).
Report-style subcommands (sweep, complexity, compare) write a CSV and
render a matplotlib figure next to it.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import io as cbio
from .analysis import angular_sweep, inscribed_disk_mask, masked_error_metrics
from .baseline import ct_project_linear, fdk_reconstruct
from .geometry import ConeGeometry
from .nufft import set_threads
from .phantom import Volume3D, interior_mask, shepp_logan_3d
from .pipeline import (calibrate_bp_normalization, calibrate_normalization,
                       count_multiplications, make_projector_config,
                       nufft_backproject, nufft_forward_project, predicted_cost)

DEFAULT_GEOMETRY = ConeGeometry(so_mm=1100.0, sd_mm=1500.0,
                                det_width_mm=512.0, det_height_mm=512.0,
                                nu=128, nv=128, n_views=256,
                                object_extent_mm=360.0)


def _save_figure(fig, csv_path: str) -> str:
    png = os.path.splitext(csv_path)[0] + ".png"
    fig.savefig(png, dpi=120, bbox_inches="tight")
    return png


def _new_figure():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _check_finite(arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise FloatingPointError("non-finite values in the result")


def _maybe_slice_pgm(vol: Volume3D, path: str | None) -> None:
    if path:
        cbio.write_pgm16(path, vol.data[:, :, vol.n // 2])


def _geometry(args) -> ConeGeometry:
    if args.geometry:
        return cbio.load_geometry(args.geometry)
    return DEFAULT_GEOMETRY


def _cmd_phantom(args) -> None:
    vol = shepp_logan_3d(args.n, args.extent_mm / args.n)
    cbio.write_volume(args.out, vol)
    _maybe_slice_pgm(vol, args.slice_pgm)


def _cmd_project(args) -> None:
    vol = cbio.read_volume(args.volume)
    geom = _geometry(args)
    if args.method == "linear":
        frames = ct_project_linear(vol, geom)
    else:
        cfg = make_projector_config(geom, vol.n, args.method[-1])
        calibrate_normalization(geom, vol.n, cfg, vol.voxel_mm)
        frames = nufft_forward_project(vol, geom, cfg)
    _check_finite([f.data for f in frames])
    cbio.write_projections(args.out, frames, geom)


def _cmd_backproject(args) -> None:
    frames, geom = cbio.read_projections(args.projections)
    n = args.n
    voxel = args.voxel_mm or geom.object_extent_mm / n
    cfg = make_projector_config(geom, n, args.method[-1])
    calibrate_bp_normalization(geom, n, cfg, voxel)
    vol = nufft_backproject(frames, geom, cfg, n, voxel)
    _check_finite([vol.data])
    cbio.write_volume(args.out, vol)
    _maybe_slice_pgm(vol, args.slice_pgm)


def _cmd_fdk(args) -> None:
    frames, geom = cbio.read_projections(args.projections)
    n = args.n
    voxel = args.voxel_mm or geom.object_extent_mm / n
    vol = fdk_reconstruct(frames, geom, n, voxel)
    _check_finite([vol.data])
    cbio.write_volume(args.out, vol)
    _maybe_slice_pgm(vol, args.slice_pgm)


def _cmd_sweep(args) -> None:
    n = args.n
    if args.image == "shepp-logan":
        img = shepp_logan_3d(n, 1.0).data[:, :, n // 2]
    else:
        img = np.random.default_rng(args.seed).uniform(0.0, 1.0, (n, n))
    thetas = [int(v) for v in args.thetas.split(",")]
    result = angular_sweep(img, thetas, args.n_rho)
    rows = [(nt, f"{err:.8g}") for nt, err in result.points]
    _write_csv(args.out_csv, ["n_theta", "error"], rows)
    plt = _new_figure()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([p[0] for p in result.points], [p[1] for p in result.points],
            marker="o")
    ax.axvline(result.plateau, color="tab:red", linestyle="--",
               label=f"plateau at {result.plateau}")
    ax.set_xlabel("angular lines")
    ax.set_ylabel("mean abs error per pixel")
    ax.set_title(f"{args.image} {n}x{n}, n_rho={args.n_rho}")
    ax.legend()
    _save_figure(fig, args.out_csv)
    plt.close(fig)
    print(f"plateau,{result.plateau}")


def _cmd_complexity(args) -> None:
    ns = [int(v) for v in args.n.split(",")]
    if args.instrument and max(ns) > 64:
        raise ValueError("--instrument builds real plans; use n <= 64")
    rows = []
    curves = {"method_a": [], "method_b": [], "ct_baseline": []}
    for n in ns:
        totals = {v: predicted_cost(n, v).total for v in curves}
        for v in curves:
            rows.append((f"predicted_{v}_n{n}", f"{totals[v]:.6g}"))
            curves[v].append(totals[v])
        ra = totals["ct_baseline"] / totals["method_a"]
        rb = totals["ct_baseline"] / totals["method_b"]
        rows.append((f"ratio_a_n{n}", f"{ra:.4f}"))
        rows.append((f"ratio_b_n{n}", f"{rb:.4f}"))
        print(f"ratio_a_n{n},{ra:.4f}")
        print(f"ratio_b_n{n},{rb:.4f}")
        if args.instrument:
            for v in curves:
                rows.append((f"measured_{v}_n{n}",
                             f"{count_multiplications(n, v).total:.6g}"))
    _write_csv(args.out_csv, ["name", "value"], rows)
    plt = _new_figure()
    fig, ax = plt.subplots(figsize=(6, 4))
    for v, ys in curves.items():
        ax.loglog(ns, ys, marker="o", label=v)
    ax.set_xlabel("N")
    ax.set_ylabel("predicted multiplications")
    ax.legend()
    _save_figure(fig, args.out_csv)
    plt.close(fig)


def _load_any(path: str):
    """Volume or projection file, as (stack, kind)."""
    meta = cbio._load_sidecar(path)
    if "geometry" in meta:
        frames, _ = cbio.read_projections(path)
        return np.stack([f.data for f in frames]), "projections"
    return cbio.read_volume(path).data, "volume"


def _cmd_compare(args) -> None:
    a, kind_a = _load_any(args.a)
    b, kind_b = _load_any(args.b)
    if kind_a != kind_b or a.shape != b.shape:
        raise ValueError(f"inputs disagree: {kind_a}{a.shape} vs "
                         f"{kind_b}{b.shape}")
    if args.mask == "none":
        mask = np.ones(a.shape, dtype=bool)
    else:
        erosion = 2 if args.mask == "interior" else 0
        thr = 1e-6 * float(np.abs(b).max())
        mask = interior_mask(b, erosion=erosion, threshold=thr)
    mean_abs, rmse, max_abs = masked_error_metrics(a, b, mask)
    rows = [("mean_abs", f"{mean_abs:.8g}"), ("rmse", f"{rmse:.8g}"),
            ("max_abs", f"{max_abs:.8g}"),
            ("mask_fraction", f"{mask.mean():.6f}")]
    _write_csv(args.out_csv, ["name", "value"], rows)
    plt = _new_figure()
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    mid = a.shape[-1] // 2
    for ax, (img, title) in zip(axes, [(a[..., mid], "a"), (b[..., mid], "b"),
                                       (a[..., mid] - b[..., mid], "a - b")]):
        if img.ndim == 3:  # projection stack: show the first view
            img = img[0]
        im = ax.imshow(img.T, origin="lower", cmap="gray")
        ax.set_title(title)
        fig.colorbar(im, ax=ax, shrink=0.8)
    _save_figure(fig, args.out_csv)
    plt.close(fig)
    for name, value in rows:
        print(f"{name},{value}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cbnufft", description=__doc__)
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("CBNUFFT_THREADS", "1")))
    p.add_argument("--seed", type=int, default=0)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("phantom", help="write a Shepp-Logan volume")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--extent-mm", type=float, default=360.0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--slice-pgm")
    sp.set_defaults(func=_cmd_phantom)

    sp = sub.add_parser("project", help="cone-beam forward projection")
    sp.add_argument("--method", required=True,
                    choices=["nufft-a", "nufft-b", "linear"])
    sp.add_argument("--volume", required=True)
    sp.add_argument("--geometry")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_project)

    sp = sub.add_parser("backproject", help="direct NUFFT backprojection")
    sp.add_argument("--method", default="nufft-a",
                    choices=["nufft-a", "nufft-b"])
    sp.add_argument("--projections", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--voxel-mm", type=float)
    sp.add_argument("--out", required=True)
    sp.add_argument("--slice-pgm")
    sp.set_defaults(func=_cmd_backproject)

    sp = sub.add_parser("fdk", help="FDK reconstruction")
    sp.add_argument("--projections", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--voxel-mm", type=float)
    sp.add_argument("--out", required=True)
    sp.add_argument("--slice-pgm")
    sp.set_defaults(func=_cmd_fdk)

    sp = sub.add_parser("sweep", help="angular-sampling error sweep")
    sp.add_argument("--image", default="shepp-logan",
                    choices=["shepp-logan", "random"])
    sp.add_argument("--n", type=int, default=128)
    sp.add_argument("--n-rho", type=int, default=256)
    sp.add_argument("--thetas",
                    default="16,32,64,128,192,200,224,256,320,384")
    sp.add_argument("--out-csv", required=True)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("complexity", help="multiplication-count model")
    sp.add_argument("--n", required=True, help="comma-separated sizes")
    sp.add_argument("--instrument", action="store_true")
    sp.add_argument("--out-csv", required=True)
    sp.set_defaults(func=_cmd_complexity)

    sp = sub.add_parser("compare", help="error metrics between two files")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--mask", default="interior",
                    choices=["interior", "support", "none"])
    sp.add_argument("--out-csv", required=True)
    sp.set_defaults(func=_cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        set_threads(args.threads)
        args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FloatingPointError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
