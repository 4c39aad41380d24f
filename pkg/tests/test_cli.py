import csv
import io
import json

import numpy as np
import pytest

from lindblad_mpa.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, RunConfig, UsageError, main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    return meta, list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_verify_report(capsys):
    code, out, _ = _run(capsys, "verify", "--N", "4")
    rep = json.loads(out)
    assert code == EXIT_OK
    assert rep["pass"] is True
    assert set(rep["checks"]) == {"ldc", "lbmc_left", "lbmc_right", "cubic", "gauge_shift", "gl2_commutators"}
    for entry in rep["checks"].values():
        assert {"residual", "tolerance", "pass"} <= set(entry)
    assert rep["meta"]["seed"] == 20160901


def test_compare_oracle_csv(capsys):
    code, out, _ = _run(capsys, "compare-oracle", "--N", "2", "3", "--format", "csv")
    meta, rows = _csv(out)
    assert code == EXIT_OK
    assert len(rows) == 2
    assert meta["max_deviation"] < 1e-8


def test_profile_rows(capsys):
    code, out, _ = _run(capsys, "profile", "--N", "12")
    _, rows = _csv(out)
    assert code == EXIT_OK
    assert [int(r["k"]) for r in rows] == list(range(1, 13))
    assert float(rows[0]["mx"]) > 0.9


def test_currents_ratio(capsys):
    code, out, _ = _run(capsys, "currents", "--N", "6", "--theta", "1.0", "2.0", "--format", "json")
    rows = json.loads(out)["rows"]
    assert code == EXIT_OK
    for r in rows:
        assert r["jy_over_jx"] == pytest.approx(r["minus_cot_half_theta"], rel=1e-12)


def test_scan_to_file(tmp_path, capsys):
    path = tmp_path / "scan.csv"
    code, out, _ = _run(capsys, "scan", "--N", "20", "--output", str(path))
    assert code == EXIT_OK and out == ""
    _, rows = _csv(path.read_text())
    assert len(rows) == 19
    assert float(rows[-1]["ratio"]) == pytest.approx(0.67545, abs=1e-5)


@pytest.mark.parametrize("source", ["mpa", "oracle"])
def test_steady_state(capsys, source):
    code, out, _ = _run(capsys, "steady-state", "--N", "2", "--source", source)
    rep = json.loads(out)
    rho = np.array(rep["real"]) + 1j * np.array(rep["imag"])
    assert code == EXIT_OK
    assert np.trace(rho) == pytest.approx(1)


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--N", "1"],
        ["verify", "--gamma", "-1"],
        ["verify", "--theta", "4"],
        ["verify", "--N", "5", "--M", "3"],
        ["scan", "--N", "500"],
        ["compare-oracle", "--N", "7"],
        ["verify", "--N", "3", "4"],
        ["currents", "--jobs", "0"],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == EXIT_USAGE
    assert err.startswith("error:")


def test_argparse_errors_exit_two():
    with pytest.raises(SystemExit) as e:
        main(["nonsense"])
    assert e.value.code == EXIT_USAGE


def test_numerical_failure_code(capsys, monkeypatch):
    from lindblad_mpa import cli
    from lindblad_mpa.lindblad import NonConvergenceError

    def boom(cfg):
        raise NonConvergenceError("no")

    monkeypatch.setitem(cli.COMMANDS, "scan", boom)
    code, _, err = _run(capsys, "scan")
    assert code == EXIT_NUMERIC
    assert "numerical failure" in err


def test_run_config():
    cfg = RunConfig("verify", N=[3], gamma=[1.0, 2.0])
    with pytest.raises(UsageError):
        cfg.single()
    assert "output" not in cfg.meta()
