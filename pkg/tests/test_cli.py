import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from integrability_lab import cli

SMOKE = {
    "diffop": ["--op", "(x^2)*d2 + x*d1 + 1", "--action", "compose", "--with", "d1"],
    "wronskian": ["--basis", "sin", "sqrt"],
    "shock": ["--profile", "linear", "--x", "0,0.5", "--t", "0.25"],
    "thomas": ["--alpha", "1.0", "--grid", "8"],
    "heat": ["--n", "32", "--t", "0.1"],
    "burgers": ["--n", "32", "--t", "0.1", "--eps", "0.5"],
    "dispersion": ["--poly", "ut - uxxx"],
    "residual": ["--pde", "kdv", "--levels", "2"],
    "jost": ["--k", "1.0", "--amp", "0.1"],
    "triad": ["--n", "1,2,3", "--a0", "1,1,1", "--t", "1"],
    "quartet": ["--c", "1,-2,0.5,0.5", "--a0", "1,1,1,1", "--t", "1"],
    "threebody": ["--law", "newton", "--T", "1", "--monitors"],
    "calogero": ["--x0", "-1,0,1", "--v0", "0.5,0,-0.5", "--T", "2", "--scatter-time", "100"],
}


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("name", sorted(SMOKE))
def test_subcommand_runs(tmp_path, name):
    out = tmp_path / name
    assert cli.main([name, *SMOKE[name], "--out", str(out), "--quiet"]) == 0
    files = sorted(p.name for p in out.iterdir())
    assert files and "error.json" not in files
    for p in out.glob("*.json"):
        assert json.loads(p.read_text())["schema_version"] == 1


def test_triad_example(tmp_path):
    out = tmp_path / "triad"
    assert cli.main(["triad", "--n", "1,2,3", "--a0", "1,1,1", "--t", "20", "--out", str(out), "--quiet"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["energy_drift"] < 1e-9
    assert report["initial_invariants"] == [6.0, 14.0]
    rows = read_csv(out / "timeseries.csv")
    assert rows[0] == ["t", "a1", "a2", "a3", "energy", "enstrophy"]
    assert float(rows[-1][0]) == pytest.approx(20.0)


def test_shock_past_breaking_exits_numerical(tmp_path):
    out = tmp_path / "shock"
    code = cli.main(["shock", "--profile", "cubic", "--x", "0", "--t", "10", "--out", str(out), "--quiet"])
    assert code == 3
    report = json.loads((out / "error.json").read_text())
    assert report["exit_code"] == 3
    assert report["module"] == "transforms"
    assert len(report["roots"]) == 3
    assert sorted(report["roots"]) == pytest.approx([-19**0.5, 0.0, 19**0.5])


def test_empty_config_lists_required_keys(tmp_path, capsys):
    cfg = tmp_path / "empty.json"
    cfg.write_text("{}")
    assert cli.main(["--config", str(cfg)]) == 2
    report = json.loads(capsys.readouterr().err)
    assert report["missing"] == ["subcommand", "params"]


def test_config_runs_and_resolves_paths(tmp_path):
    cfg = tmp_path / "cfg" / "run.json"
    cfg.parent.mkdir()
    cfg.write_text(json.dumps({"subcommand": "triad", "params": {"n": [1, 2, 3], "a0": "1,1,1", "t": 1}, "out": "res"}))
    assert cli.main(["--config", str(cfg), "--quiet"]) == 0
    assert (cfg.parent / "res" / "report.json").exists()


@pytest.mark.parametrize(
    "payload",
    [
        {"subcommand": "triad", "params": {}, "colour": 1},
        {"subcommand": "triad", "params": {"n": "1,2,3", "a0": "1,1,1", "t": 1, "bogus": 2}},
        {"subcommand": "nope", "params": {}},
        [1, 2],
    ],
)
def test_bad_config_exits_config(tmp_path, payload):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(payload))
    assert cli.main(["--config", str(cfg), "--quiet"]) == 2


def test_malformed_json_exits_config(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert cli.main(["--config", str(cfg), "--quiet"]) == 2


def test_config_with_subcommand_rejected(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"subcommand": "triad", "params": {}}))
    assert cli.main(["--config", str(cfg), "triad", "--a0", "1,1,1", "--t", "1", "--quiet"]) == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["wronskian", "--basis", "poly()"],
        ["dispersion", "--poly", "ut = "],
        ["calogero", "--x0", "1,0", "--v0", "0,0"],
        ["threebody", "--law", "poincare", "--T", "1"],
        ["triad", "--a0", "1,1", "--n", "1,2,3", "--t", "1"],
    ],
)
def test_invalid_inputs_exit_config(tmp_path, argv):
    assert cli.main([*argv, "--out", str(tmp_path / "o"), "--quiet"]) == 2
    assert (tmp_path / "o" / "error.json").exists()


def test_csv_uses_round_trip_precision(tmp_path):
    out = tmp_path / "heat"
    cli.main(["heat", "--n", "16", "--t", "0.3", "--out", str(out), "--quiet"])
    csvs = sorted(out.glob("*.csv"))
    assert csvs
    rows = read_csv(csvs[0])
    assert rows[0][0] == "x"
    for row in rows[1:]:
        for cell in row:
            assert float(repr(float(cell))) == float(cell)
            assert "," not in cell
            assert len(cell.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) <= 17


def test_fmt_round_trips():
    for v in (0.1, 1 / 3, 2.0**-40, -123456.789, 1e300):
        assert float(cli.fmt(v)) == v


def test_identical_runs_are_byte_identical(tmp_path):
    for i in range(2):
        cli.main(["burgers", "--n", "32", "--t", "0.2", "--out", str(tmp_path / f"r{i}"), "--quiet", "--seed", "7"])
    names = sorted(p.name for p in (tmp_path / "r0").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "r1").iterdir())
    for name in names:
        assert (tmp_path / "r0" / name).read_bytes() == (tmp_path / "r1" / name).read_bytes()


def test_negative_list_values_are_accepted(tmp_path):
    out = tmp_path / "cal"
    assert cli.main(["calogero", "--x0", "-2,-1,1", "--v0", "-0.1,0,0.1", "--T", "1", "--out", str(out), "--quiet"]) == 0
    header = read_csv(out / "timeseries.csv")[0]
    assert header == ["t", "x1", "x2", "x3", "energy"]


def test_two_particle_calogero_header(tmp_path):
    out = tmp_path / "cal2"
    assert cli.main(["calogero", "--x0", "0,1", "--v0", "0.5,-0.5", "--T", "1", "--scatter-time", "50",
                     "--out", str(out), "--quiet"]) == 0
    assert read_csv(out / "timeseries.csv")[0] == ["t", "x1", "x2", "energy"]


def write_field(path, values):
    x = 2 * np.pi * np.arange(len(values)) / len(values)
    path.write_text("x,value\n" + "".join(f"{float(a)!r},{float(v)!r}\n" for a, v in zip(x, values)))


@pytest.mark.parametrize("direction,profile", [("forward", lambda x: 2 + np.cos(x)), ("inverse", lambda x: 0.3 * np.sin(x))])
def test_colehopf_reads_field_csv(tmp_path, direction, profile):
    src = tmp_path / "u.csv"
    write_field(src, profile(2 * np.pi * np.arange(32) / 32))
    out = tmp_path / "ch"
    assert cli.main(["colehopf", "--in", str(src), "--direction", direction, "--out", str(out), "--quiet"]) == 0
    assert json.loads((out / "report.json").read_text())["round_trip_gap"] < 1e-10


def test_colehopf_nonpositive_w_is_numerical_failure(tmp_path):
    src = tmp_path / "w.csv"
    write_field(src, np.sin(2 * np.pi * np.arange(16) / 16))
    assert cli.main(["colehopf", "--in", str(src), "--out", str(tmp_path / "o"), "--quiet"]) == 3
    report = json.loads((tmp_path / "o" / "error.json").read_text())
    assert report["error"] == "PositivityError"


def test_colehopf_rejects_bad_header(tmp_path):
    src = tmp_path / "u.csv"
    src.write_text("a,b\n0,1\n")
    assert cli.main(["colehopf", "--in", str(src), "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_no_subcommand_exits_config(capsys):
    assert cli.main([]) == 2


def test_unknown_option_exits_config(tmp_path, capsys):
    assert cli.main(["heat", "--t", "1", "--bogus", "--out", str(tmp_path / "h")]) == 2


def test_subprocess_thread_variable_checked(tmp_path):
    env = {"INTEGRABILITY_LAB_THREADS": "zero", "PATH": ""}
    proc = subprocess.run(
        [sys.executable, "-m", "integrability_lab", "dispersion", "--poly", "ut - ux", "--out", str(tmp_path / "d")],
        env=env,
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "INTEGRABILITY_LAB_THREADS" in proc.stderr


def test_subprocess_entry_point_succeeds(tmp_path):
    env = {"INTEGRABILITY_LAB_THREADS": "1", "PATH": ""}
    proc = subprocess.run(
        [sys.executable, "-m", "integrability_lab", "dispersion", "--poly", "ut - uxxx", "--out", str(tmp_path / "d")],
        env=env,
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    report = json.loads(next((tmp_path / "d").glob("*.json")).read_text())
    assert report["schema_version"] == 1
