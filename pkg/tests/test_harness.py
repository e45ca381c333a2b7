import csv
import json
import math
import subprocess
import sys

import pytest
import yaml

from seqmeas import cli, harness

MINIMAL = {
    "scenarios": ["one"],
    "lattice": {"n_points": 512, "window": [-10, 10]},
    "states": [{"kind": "gaussian", "sigma": 1.0}],
    "f": {"shape": "gaussian", "width": 0.3},
}


def write(tmp_path, cfg, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg) if isinstance(cfg, dict) else cfg)
    return path


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def test_minimal_run(tmp_path):
    out = tmp_path / "out"
    code = cli.main(["run", str(write(tmp_path, MINIMAL)), "--out-dir", str(out)])
    assert code == 0
    rows = read_rows(out / "results.csv")
    assert len(rows) == 1
    assert float(rows[0]["margin"]) >= 0
    assert rows[0]["status"] == "ok"
    assert (out / "run.log").read_text().count("1 rows, 0 violations") == 1
    doc = json.loads((out / "results.json").read_text())
    assert doc["metadata"]["tolerance_budget"] == 1e-3
    assert doc["metadata"]["format_version"] == harness.FORMAT_VERSION
    assert doc["rows"][0]["margin"] == pytest.approx(float(rows[0]["margin"]), rel=1e-8)
    assert doc["rows"][0]["runtime_ms"] > 0


def test_csv_header_versioned(tmp_path):
    out = tmp_path / "out"
    cli.main(["run", str(write(tmp_path, MINIMAL)), "--out-dir", str(out), "--format", "csv"])
    first = (out / "results.csv").read_text().splitlines()[0]
    assert first.startswith("# seqmeas results format 1")
    assert not (out / "results.json").exists()


def test_width_order_sweep(tmp_path):
    cfg = dict(MINIMAL, lattice={"n_points": 1024, "window": [-10, 10]},
               f={"shape": "gaussian", "widths": [0.01, 0.1, 1.0]}, orders=[1.0, 2.0], coverage_tol=1e-4)
    out = tmp_path / "out"
    assert cli.main(["run", str(write(tmp_path, cfg)), "--out-dir", str(out)]) == 0
    rows = read_rows(out / "results.csv")
    assert len(rows) == 6
    assert all(float(r["margin"]) >= 0 for r in rows)


def test_coarse_bins_warn(tmp_path):
    cfg = dict(MINIMAL, bins=[{"zeta": 3.0, "xi": 3.0}])
    out = tmp_path / "out"
    with pytest.warns(UserWarning, match="phase cell"):
        assert harness.run(write(tmp_path, cfg), out) == 0
    rows = read_rows(out / "results.csv")
    assert float(rows[0]["bound"]) < 0 < float(rows[0]["margin"])
    assert "phase cell" in (out / "run.log").read_text()


@pytest.mark.parametrize("change, message", [
    ({"orders": [0.4]}, "non-positive beta"),
    ({"families": ["tsallis"]}, "Tsallis"),
    ({"f": {"shape": "gaussian", "width": 0.01}, "scenarios": ["two"]}, "not resolved"),
    ({"lattice": {"n_points": 64, "window": [3, -3]}}, "hi > lo"),
    ({"f": {"shape": "triangle", "width": 0.1}}, "triangle"),
    ({"extra": 1}, "extra"),
])
def test_validate_errors(tmp_path, capsys, change, message):
    code = cli.main(["validate", str(write(tmp_path, {**MINIMAL, **change}))])
    assert code == harness.EXIT_CONFIG
    assert message in capsys.readouterr().out


def test_validate_ok_echoes_derived(tmp_path, capsys):
    code = cli.main(["validate", str(write(tmp_path, dict(MINIMAL, orders=[1.0, 2.0])))])
    out = capsys.readouterr().out
    assert code == 0
    assert out.startswith("ok")
    assert "beta=0.666667" in out and "mu=2" in out
    assert f"kappa={math.sqrt(6.75):.9g}" in out and f"kappa={math.e:.9g}" in out


def test_parse_and_missing_file(tmp_path):
    assert cli.main(["run", str(write(tmp_path, "scenarios: [one\n")), "--out-dir", str(tmp_path / "o")]) == 2
    assert cli.main(["run", str(tmp_path / "nope.yaml"), "--out-dir", str(tmp_path / "o")]) == 2
    assert cli.main(["run", str(write(tmp_path, MINIMAL)), "--threads", "0"]) == 2


def test_coverage_error_exit_code(tmp_path):
    cfg = dict(MINIMAL, states=[{"kind": "gaussian", "sigma": 1.0}, {"kind": "gaussian", "y0": 9.0, "name": "edge"}])
    out = tmp_path / "out"
    assert cli.main(["run", str(write(tmp_path, cfg)), "--out-dir", str(out)]) == harness.EXIT_COVERAGE
    assert len(read_rows(out / "results.csv")) == 1
    log = (out / "run.log").read_text()
    assert "coverage error" in log and "edge" in log


def test_violation_exit_code(tmp_path, monkeypatch):
    real = harness.run_task

    def broken(task, cfg):
        rows = real(task, cfg)
        for r in rows:
            r["status"] = "violation"
        return rows

    monkeypatch.setattr(harness, "run_task", broken)
    out = tmp_path / "out"
    assert harness.run(write(tmp_path, MINIMAL), out) == harness.EXIT_VIOLATION
    assert "bound violated" in (out / "run.log").read_text()


def test_tolerance_flag(tmp_path):
    out = tmp_path / "out"
    cli.main(["run", str(write(tmp_path, MINIMAL)), "--out-dir", str(out), "--tolerance", "0.05"])
    assert read_rows(out / "results.csv")[0]["budget"] == "0.05"


def test_deterministic_across_threads(tmp_path, monkeypatch):
    cfg = dict(MINIMAL, scenarios=["prep", "one", "two"], states=[{"kind": "random", "count": 3, "seed": 4}],
               f={"shape": "gaussian", "widths": [0.1, 0.5]}, orders=[1.0, 1.5],
               bins=[None, {"zeta": 0.2, "xi": 0.2}], families=["renyi", "tsallis"])
    path = write(tmp_path, cfg)
    harness.run(path, tmp_path / "a", threads=1)
    monkeypatch.setenv(harness.THREADS_ENV, "4")
    assert harness.default_threads() == 4
    harness.run(path, tmp_path / "b")
    a = (tmp_path / "a" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "results.csv").read_bytes()
    assert len(read_rows(tmp_path / "a" / "results.csv")) == 3 * 3 * 2 * 2 * 3


def test_separate_g_profiles(tmp_path):
    cfg = dict(MINIMAL, g={"shape": "tophat", "widths": [0.2, 0.4]})
    out = tmp_path / "out"
    harness.run(write(tmp_path, cfg), out)
    rows = read_rows(out / "results.csv")
    assert [r["g_shape"] for r in rows] == ["tophat", "tophat"]
    assert [r["g_width"] for r in rows] == ["0.2", "0.4"]


def test_explicit_marks(tmp_path):
    marks = [round(-10 + 0.25 * k, 2) for k in range(81)]
    cfg = dict(MINIMAL, bins=[{"zeta_marks": marks, "xi_marks": [-12.0, -1.0, 0.0, 1.0, 12.0]}])
    out = tmp_path / "out"
    assert harness.run(write(tmp_path, cfg), out) == 0
    assert read_rows(out / "results.csv")[0]["zeta_bin"] == "marks"


def test_pegg_barnett_rows(tmp_path):
    cfg = {"scenarios": ["pegg-barnett"], "pegg_barnett": {"dims": [16, 64, 128]}}
    out = tmp_path / "out"
    assert harness.run(write(tmp_path, cfg), out) == 0
    rows = read_rows(out / "results.csv")
    assert [int(r["d"]) for r in rows] == [15, 63, 127]
    devs = [float(r["pb_deviation"]) for r in rows]
    assert devs == sorted(devs, reverse=True)


def test_demo_listing_and_run(tmp_path, capsys):
    assert cli.main(["demo"]) == 0
    names = capsys.readouterr().out.split()
    assert {"gaussian", "sweep", "coarse-bins", "pegg-barnett", "mixed"} <= set(names)
    assert cli.main(["demo", "gaussian", "--out-dir", str(tmp_path / "g")]) == 0
    assert cli.main(["demo", "unknown"]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "seqmeas", "validate", str(write(tmp_path, MINIMAL))],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("ok")
