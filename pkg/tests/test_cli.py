import csv
import io
import json
import math

import pytest

from lastzero import __version__
from lastzero.cli import COLUMNS, run


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_cdf_at_horizon(capsys):
    code, out, err = call(capsys, "cdf", "--mu", "1", "--t", "1", "--a", "1")
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 1 and float(rows[0]["cdf"]) == 1.0
    manifest = json.loads(err)
    assert manifest["version"] == __version__
    assert manifest["params"]["mu"] == 1.0
    assert manifest["argv"][0] == "cdf"


def test_csv_format(capsys):
    code, out, _ = call(capsys, "cdf", "--mu", "1", "--t", "1", "--grid", "5")
    lines = out.split("\n")
    assert lines[0] == "mu,t,a,cdf"
    assert "\r" not in out and out.endswith("\n")
    assert len(lines) == 7
    # 17 significant digits in scientific notation
    assert lines[2].split(",")[2] == "2.50000000000000000e-01"


def test_moments_variance_limit(capsys):
    code, out, _ = call(capsys, "moments", "--mu", "1", "--t", "1", "--r", "10000")
    assert code == 0
    assert float(rows_of(out)[0]["r2_variance"]) == pytest.approx(2.0, rel=1e-10)


def test_md_scan_final_row(capsys):
    code, out, _ = call(capsys, "md", "--mu", "1", "--t", "1", "--z", "1", "--beta", "0.5",
                        "--r-min", "10", "--r-max", "1e6", "--r-points", "12")
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 12
    assert float(rows[-1]["abs_err"]) <= 0.01
    assert float(rows[-1]["extrapolated"]) == pytest.approx(-0.5, rel=0.02)


def test_json_mirrors_csv(capsys, tmp_path):
    args = ["crossing-scan", "--mu", "1", "--a", "0.5", "--b", "1", "--r-points", "5"]
    _, csv_out, _ = call(capsys, *args)
    _, json_out, _ = call(capsys, *args, "--format", "json")
    doc = json.loads(json_out)
    assert set(doc) == {"manifest", "rows"}
    csv_rows = rows_of(csv_out)
    assert [list(r) for r in doc["rows"]] == [COLUMNS["crossing-scan"]] * 5
    for c, j in zip(csv_rows, doc["rows"]):
        for key in COLUMNS["crossing-scan"]:
            assert float(c[key]) == j[key]


def test_every_subcommand_runs(capsys):
    commands = [
        ["cdf", "--mu", "1", "--t", "1", "--a", "0.3"],
        ["pdf", "--mu", "1", "--t", "1", "--grid", "4"],
        ["moments", "--mu", "2", "--t", "1"],
        ["crossing", "--mu", "1", "--a", "0.5", "--b", "1"],
        ["limit-law", "--mu", "1", "--a", "0.5"],
        ["limit-law", "--mu", "1", "--moments"],
        ["sample", "--mu", "1", "--t", "1", "--n", "10", "--seed", "3"],
        ["sample", "--mu", "1", "--n", "10", "--seed", "3", "--limit-law"],
        ["mc", "--mu", "1", "--t", "1", "--n-paths", "500", "--dt", "1e-2", "--seed", "1", "--cdf-at", "0.3"],
        ["mc", "--mu", "1", "--t", "1", "--n-paths", "500", "--dt", "1e-2", "--seed", "1",
         "--crossing", "0.5", "1", "--no-bridge"],
        ["ldp", "--mu", "1", "--t", "1", "--z", "0.4", "--r-min", "10", "--r-max", "1e3", "--r-points", "4"],
        ["crossing-scan", "--mu", "1", "--a", "0.5", "--b", "1"],
    ]
    for argv in commands:
        code, out, _ = call(capsys, *argv)
        assert code == 0, argv
        assert out.split("\n")[0] == ",".join(COLUMNS[argv[0]])


def test_underflowing_probability_only_as_log(capsys):
    code, out, _ = call(capsys, "crossing", "--mu", "100", "--a", "1", "--b", "2")
    row = rows_of(out)[0]
    assert row["psi"] == ""
    assert float(row["log_psi"]) < -5000
    code, out, _ = call(capsys, "crossing", "--mu", "1", "--a", "0.5", "--b", "1")
    row = rows_of(out)[0]
    assert float(row["psi"]) == pytest.approx(math.exp(float(row["log_psi"])), rel=1e-12)


@pytest.mark.parametrize("argv, flag", [
    (["cdf", "--mu", "0", "--t", "1", "--a", "0.5"], "--mu"),
    (["cdf", "--mu", "1", "--t", "-1", "--a", "0.5"], "--t"),
    (["crossing", "--mu", "1", "--a", "1", "--b", "0.5"], "--b"),
    (["md", "--mu", "1", "--t", "1", "--z", "1", "--beta", "1.5"], "--beta"),
    (["mc", "--mu", "1", "--t", "1", "--n-paths", "50", "--dt", "1e-3", "--seed", "1", "--cdf-at", "0.3"], "--n-paths"),
    (["mc", "--mu", "1", "--t", "1", "--n-paths", "500", "--dt", "0.5", "--seed", "1", "--cdf-at", "0.3"], "--dt"),
    (["sample", "--mu", "1", "--t", "1", "--n", "1.5", "--seed", "1"], "--n"),
    (["cdf", "--t", "1", "--a", "0.5"], "--mu"),
    (["ldp", "--mu", "1", "--t", "1", "--z", "0.5", "--tol", "2"], "--tol"),
])
def test_invalid_arguments_exit_2(capsys, argv, flag):
    code, out, err = call(capsys, *argv)
    assert code == 2
    assert flag in err
    assert out == ""


def test_mu_message(capsys):
    _, _, err = call(capsys, "crossing", "--mu", "0", "--a", "0.5", "--b", "1")
    assert "mu must be nonzero" in err


def test_nonconvergence_exit_3(capsys):
    # a tolerance far below double precision cannot be met
    code, _, err = call(capsys, "cdf", "--mu", "1", "--t", "1", "--a", "0.3", "--tol", "1e-300")
    assert code == 3
    assert "converge" in err


def test_out_file_and_replay(capsys, tmp_path):
    out = tmp_path / "table.csv"
    code, stdout, _ = call(capsys, "sample", "--mu", "1", "--t", "1", "--n", "50", "--seed", "7",
                           "--out", str(out))
    assert code == 0 and stdout == ""
    manifest = tmp_path / "table.csv.manifest.json"
    doc = json.loads(manifest.read_text())
    assert doc["seed"] == 7 and "timestamp" in doc
    again = tmp_path / "again.csv"
    assert call(capsys, "replay", str(manifest), "--out", str(again))[0] == 0
    assert again.read_bytes() == out.read_bytes()


def test_replay_from_json(capsys, tmp_path):
    out = tmp_path / "t.json"
    call(capsys, "cdf", "--mu", "2", "--t", "1", "--grid", "3", "--format", "json", "--out", str(out))
    again = tmp_path / "u.json"
    call(capsys, "replay", str(out), "--out", str(again))
    assert json.loads(again.read_text())["rows"] == json.loads(out.read_text())["rows"]


def test_help_lists_columns(capsys):
    code, out, _ = call(capsys, "mc", "--help")
    assert code == 0
    assert "columns: target,a,b,p_hat" in out


def test_thread_count_does_not_change_output(capsys, monkeypatch):
    args = ["mc", "--mu", "1", "--t", "1", "--n-paths", "1000", "--dt", "1e-2", "--seed", "5", "--cdf-at", "0.3"]
    monkeypatch.setenv("LASTZERO_THREADS", "1")
    _, one, _ = call(capsys, *args)
    monkeypatch.setenv("LASTZERO_THREADS", "4")
    _, four, _ = call(capsys, *args)
    assert one == four
