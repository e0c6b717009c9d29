import csv
import re
import subprocess
import sys

import pytest

from snrdps.cli import BOUNDS_HEADER, RATE_HEADER, main


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_bounds_csv(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bounds", "--t", "1", "5", "--rows", "21", "--out", str(out)]) == 0
    rows = read(out)
    assert rows[0] == BOUNDS_HEADER
    assert len(rows) == 1 + 2 * 2 * 21
    assert b"\r" not in out.read_bytes()
    first = rows[1]
    assert first[:3] == ["0", "0", "1"] and first[3:] == ["32", "2"]


def test_bounds_deterministic_and_digits(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["bounds", "--t", "2", "--nu", "2", "--rows", "33", "--out", str(p),
                     "--with-rrdps"]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = read(a)
    assert rows[0][-1] == "e_ph_rrdps"
    for row in rows[1:]:
        digits = re.sub(r"[^0-9]", "", row[1].split("e")[0]).lstrip("0")
        assert len(digits) <= 12


def test_rate_csv_and_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("SNRDPS_OUTPUT_DIR", str(tmp_path))
    assert main(["rate", "--t", "2", "--km-max", "20", "--km-step", "10",
                 "--protocol", "both", "--out", "r.csv"]) == 0
    rows = read(tmp_path / "r.csv")
    assert rows[0] == RATE_HEADER
    assert [r[-1] for r in rows[1:]] == ["snrdps", "rrdps"] * 3
    assert [float(r[0]) for r in rows[1:]] == [0, 0, 10, 10, 20, 20]


def test_rate_absent_mu_is_empty_field(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["rate", "--ebit", "0.3", "--km-max", "0", "--out", str(out)]) == 0
    row = read(out)[1]
    assert row[2] == "" and row[3] == "" and row[10] == "0"


def test_usage_errors(tmp_path, capsys):
    assert main(["bounds", "--L", "6", "--t", "3", "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["bounds", "--nu", "3", "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["rate", "--ebit", "0.7", "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["rate", "--km-step", "0", "--out", str(tmp_path / "x.csv")]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["bounds", "--rows", "3", "--out", str(blocker / "x.csv")]) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_verify_single_block_length(capsys):
    assert main(["verify", "--check", "lemma1", "--L", "6"]) == 0
    out = capsys.readouterr().out
    assert "control" in out and "as expected" in out
    assert main(["verify", "--check", "lemma1", "--L", "9"]) == 2


def test_verify_corruption_exit_code(tmp_path):
    assert main(["verify", "--check", "theorem1", "--corrupt",
                 "--out", str(tmp_path / "v.csv")]) == 1
    assert read(tmp_path / "v.csv")[0][0] == "name"


def test_plot_script_reads_csv_only(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bounds", "--rows", "11", "--out", str(out), "--plot-script", "--figure"]) == 0
    script = tmp_path / "b_plot.py"
    src = script.read_text()
    assert "b.csv" in src
    # no computed values are baked into the script
    assert not re.search(r"\d\.\d{3,}", src)
    assert (tmp_path / "b.png").stat().st_size > 0
    res = subprocess.run([sys.executable, str(script)], env={"MPLBACKEND": "Agg"},
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "snrdps", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify" in res.stdout
