import csv
import logging
import subprocess
import sys

import numpy as np
import pytest

from cohvortex import cli
from cohvortex.export import read_ppm

SMALL = ["--window", "-15:-0.01:300", "0.01:15:300"]


def run(*argv):
    return cli.main([str(a) for a in argv])


def rows(path):
    return list(csv.reader(path.open()))


def test_field_outputs(tmp_path):
    out = tmp_path / "f"
    assert run("field", "--step", "0.99", "--k", "1", *SMALL, "--out", out) == 0
    assert len(rows(out / "field.csv")) == 1 + 300 * 300
    assert read_ppm(out / "density.ppm").shape == (300, 300, 3)
    assert read_ppm(out / "phase.ppm").shape == (300, 300, 3)


def test_field_free_space_uniform_density(tmp_path):
    out = tmp_path / "f"
    assert run("field", "--step", "0", "--window", "-5:5:40", "-5:5:40", "--out", out) == 0
    img = read_ppm(out / "density.ppm")
    assert img.min() == img.max() == 255


def test_field_three_segment_potential_logs_hermiticity(tmp_path, caplog):
    caplog.set_level(logging.INFO, logger="cohvortex")
    out = tmp_path / "f"
    code = run(
        "field", "--breakpoints", "-1,0,2", "--heights", "0,0.5,1.3,0.2", "--window", "-10:10:80", "-10:10:80", "--out", out
    )
    assert code == 0
    assert any("hermiticity" in r.message for r in caplog.records)
    assert (out / "field.csv").exists()


def test_field_normalized_export(tmp_path):
    out = tmp_path / "g"
    assert run("field", "--normalize", "--window", "-3:3:7", "-3:3:7", "--out", out) == 0
    r = rows(out / "field.csv")
    diag = [float(x[4]) for x in r[1:] if x[0] == x[1]]
    np.testing.assert_allclose(diag, 1.0, atol=1e-14)


def test_field_csv_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["field", "--window", "-4:-0.1:30", "0.1:4:30"]
    assert run(*args, "--out", a) == 0 and run(*args, "--out", b) == 0
    for name in ("field.csv", "density.ppm", "phase.ppm"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_vortices_catalogs(tmp_path):
    out = tmp_path / "v"
    assert run("vortices", *SMALL, "--out", out) == 0
    det = rows(out / "detected.csv")
    ana = rows(out / "analytic.csv")
    assert det[0] == ["x", "xp", "charge", "source", "residual"]
    assert len(det) == len(ana) == 21
    assert {r[3] for r in det[1:]} == {"detected"}
    match = rows(out / "match.csv")
    assert all(float(r[5]) < 0.06 for r in match[1:])


def test_vortices_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("vortices", *SMALL, "--out", a) == 0
    assert run("vortices", *SMALL, "--out", b) == 0
    for name in ("detected.csv", "analytic.csv", "match.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_vortices_general_potential_no_analytic(tmp_path):
    out = tmp_path / "v"
    code = run("vortices", "--breakpoints", "0,1.3", "--heights", "0,1.2,0.99", *SMALL, "--out", out)
    assert code == 0
    assert len(rows(out / "detected.csv")) > 1
    assert not (out / "analytic.csv").exists()


def test_fringes_outputs(tmp_path):
    out = tmp_path / "fr"
    assert run("fringes", *SMALL, "--out", out) == 0
    for name in ("alpha", "beta", "gamma", "delta", "core"):
        assert rows(out / f"fringes_{name}.csv")[0] == ["theta", "intensity"]
    scan = rows(out / "ratchet.csv")
    assert scan[0] == ["step", "x", "xp", "offset", "cumulative"]
    assert len(scan) == 1 + 4 * 40 + 1
    assert abs(abs(float(scan[-1][4])) - 2 * np.pi) < 1e-9


def test_fringes_explicit_centre_without_zero(tmp_path):
    out = tmp_path / "fr"
    assert run("fringes", "--center", "-8:0.8", "--half-side", "0.3", *SMALL, "--out", out) == 0
    assert abs(float(rows(out / "ratchet.csv")[-1][4])) < 1e-12


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# regression fixture\n"
        "k = 1\n"
        "step = 0.99\n"
        "window = -15:-0.01:300 0.01:15:300\n"
        "eps_g = 1e-12\n"
        f"out = {tmp_path / 'cfg'}\n"
    )
    assert run("vortices", "--config", cfg) == 0
    assert len(rows(tmp_path / "cfg" / "detected.csv")) == 21
    # flags given on the command line win
    assert run("vortices", "--config", cfg, "--out", tmp_path / "over") == 0
    assert (tmp_path / "over" / "detected.csv").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["field", "--k", "1", "--energy", "1"],
        ["field", "--weights", "0,0"],
        ["field", "--breakpoints", "0,1", "--heights", "0,1"],
        ["field", "--step", "0.5", "--heights", "0,1"],
        ["field", "--eps-g", "0"],
        ["field", "--window", "1:0:10", "0:1:10"],
        ["field", "--window", "0:1:1", "0:1:10"],
        ["field", "--step", "1.0", "--breakpoints", "0"],
        ["vortices", "--config", "/nonexistent/run.cfg"],
    ],
)
def test_invalid_configs_exit_nonzero(tmp_path, argv):
    try:
        code = run(*argv, "--out", tmp_path / "x")
    except SystemExit as exc:  # argparse rejects malformed values itself
        code = exc.code
    assert code != 0


def test_singular_potential_reports_error(tmp_path):
    # E == V in the middle region: zero wavevector
    code = run("field", "--breakpoints", "0,1", "--heights", "0,1,0", "--window", "-2:2:5", "-2:2:5", "--out", tmp_path)
    assert code == 2


def test_reproduce_fig5(tmp_path, capsys):
    out = tmp_path / "fig5"
    assert run("reproduce-fig5", "--out", out) == 0
    summary = (out / "summary.txt").read_text().splitlines()
    assert summary[-1] == "OVERALL PASS"
    assert all(line.startswith("PASS") for line in summary[:-1])
    assert read_ppm(out / "density.ppm").shape == (1500, 1500, 3)
    assert len(rows(out / "detected.csv")) == 21
    assert not (out / "field.csv").exists()
    assert "OVERALL PASS" in capsys.readouterr().out


def test_console_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "cohvortex.cli", "vortices", *SMALL, "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
    assert "detected 20 sites" in res.stderr
