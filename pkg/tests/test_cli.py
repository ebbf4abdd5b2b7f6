"""CLI tests: every subcommand end to end at a small scale, report files
(CSV plus rendered figure), and the exit-code contract."""

import csv
import os

import numpy as np
import pytest

from cbnufft import io as cbio
from cbnufft.cli import DEFAULT_GEOMETRY, main
from cbnufft.geometry import ConeGeometry

GEOM = ConeGeometry(1100.0, 1500.0, 512.0, 512.0, 16, 16, 12, 360.0)


@pytest.fixture()
def small_setup(tmp_path):
    gpath = str(tmp_path / "g.json")
    cbio.save_geometry(gpath, GEOM)
    vpath = str(tmp_path / "p.vol")
    assert main(["phantom", "--n", "16", "--out", vpath]) == 0
    return tmp_path, gpath, vpath


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_default_geometry_sane():
    assert DEFAULT_GEOMETRY.nu == 128 and DEFAULT_GEOMETRY.n_views == 256


def test_phantom_writes_volume_and_pgm(tmp_path):
    vpath = str(tmp_path / "p.vol")
    ppath = str(tmp_path / "s.pgm")
    assert main(["phantom", "--n", "16", "--out", vpath,
                 "--slice-pgm", ppath]) == 0
    vol = cbio.read_volume(vpath)
    assert vol.n == 16
    assert open(ppath, "rb").read(3) == b"P5\n"


@pytest.mark.parametrize("method", ["linear", "nufft-a", "nufft-b"])
def test_project_all_methods(small_setup, method):
    tmp_path, gpath, vpath = small_setup
    out = str(tmp_path / f"{method}.prj")
    assert main(["project", "--method", method, "--volume", vpath,
                 "--geometry", gpath, "--out", out]) == 0
    frames, geom = cbio.read_projections(out)
    assert len(frames) == GEOM.n_views
    assert np.all(np.isfinite(frames[0].data))


def test_fdk_and_backproject_and_compare(small_setup):
    tmp_path, gpath, vpath = small_setup
    prj = str(tmp_path / "l.prj")
    main(["project", "--method", "linear", "--volume", vpath,
          "--geometry", gpath, "--out", prj])
    fdk = str(tmp_path / "fdk.vol")
    assert main(["fdk", "--projections", prj, "--n", "16",
                 "--out", fdk]) == 0
    bp = str(tmp_path / "bp.vol")
    assert main(["backproject", "--projections", prj, "--n", "16",
                 "--out", bp]) == 0
    csv_path = str(tmp_path / "cmp.csv")
    assert main(["compare", "--a", bp, "--b", fdk,
                 "--out-csv", csv_path]) == 0
    rows = dict(read_csv(csv_path)[1:])
    assert set(rows) == {"mean_abs", "rmse", "max_abs", "mask_fraction"}
    assert os.path.exists(str(tmp_path / "cmp.png"))


def test_compare_rejects_mixed_kinds(small_setup):
    tmp_path, gpath, vpath = small_setup
    prj = str(tmp_path / "l.prj")
    main(["project", "--method", "linear", "--volume", vpath,
          "--geometry", gpath, "--out", prj])
    assert main(["compare", "--a", vpath, "--b", prj,
                 "--out-csv", str(tmp_path / "x.csv")]) == 2


def test_sweep_report(tmp_path):
    csv_path = str(tmp_path / "sw.csv")
    assert main(["sweep", "--image", "shepp-logan", "--n", "32",
                 "--n-rho", "64", "--thetas", "8,16,32,64",
                 "--out-csv", csv_path]) == 0
    rows = read_csv(csv_path)
    assert rows[0] == ["n_theta", "error"]
    assert len(rows) == 5
    assert os.path.exists(str(tmp_path / "sw.png"))


def test_complexity_report(tmp_path, capsys):
    csv_path = str(tmp_path / "cx.csv")
    assert main(["complexity", "--n", "16,32", "--instrument",
                 "--out-csv", csv_path]) == 0
    rows = dict(read_csv(csv_path)[1:])
    assert "ratio_a_n32" in rows and "measured_ct_baseline_n16" in rows
    assert float(rows["measured_ct_baseline_n16"]) == 8.0 * 16 ** 3 * 4
    out = capsys.readouterr().out
    assert "ratio_a_n16," in out and "ratio_b_n32," in out
    assert os.path.exists(str(tmp_path / "cx.png"))


def test_complexity_instrument_guard(tmp_path):
    assert main(["complexity", "--n", "16,512", "--instrument",
                 "--out-csv", str(tmp_path / "c.csv")]) == 2


def test_exit_code_validation_error(tmp_path):
    assert main(["project", "--method", "linear",
                 "--volume", str(tmp_path / "missing.vol"),
                 "--out", str(tmp_path / "o.prj")]) == 2


def test_exit_code_numerical_failure(monkeypatch, small_setup):
    tmp_path, gpath, vpath = small_setup
    import cbnufft.cli as cli

    def bad_project(vol, geom, counter=None):
        from cbnufft.grangeat import DetectorFrame
        frames = [DetectorFrame(k, np.zeros((geom.nu, geom.nv)),
                                geom.pixel_mm) for k in range(geom.n_views)]
        frames[0].data[0, 0] = np.inf  # bypasses the frame validator
        return frames

    monkeypatch.setattr(cli, "ct_project_linear", bad_project)
    assert main(["project", "--method", "linear", "--volume", vpath,
                 "--geometry", gpath, "--out", str(tmp_path / "o.prj")]) == 3


def test_threads_flag_validation(small_setup):
    tmp_path, gpath, vpath = small_setup
    assert main(["--threads", "0", "phantom", "--n", "16",
                 "--out", str(tmp_path / "t.vol")]) == 2
    assert main(["--threads", "2", "phantom", "--n", "16",
                 "--out", str(tmp_path / "t.vol")]) == 0
    from cbnufft.nufft import set_threads
    set_threads(1)
