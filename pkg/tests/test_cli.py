import csv
import json
import subprocess
import sys

import pytest

from plutosim import lut as LT
from plutosim.cli import main


@pytest.fixture
def files(tmp_path):
    (tmp_path / "dev.cfg").write_text("profile = paper-DDR4\nrow_size_bytes = 256\n"
                                      "parallel_subarrays = 4\nvariant = GMC\n")
    (tmp_path / "w.cfg").write_text("workload = bitcount\nbytes = 2048\nseed = 3\n")
    return tmp_path


def test_run_writes_outputs_and_replays(files, capsys):
    out = files / "out"
    rc = main(["run", "--config", str(files / "dev.cfg"), "--workload", str(files / "w.cfg"),
               "--out", str(out), "--emit-trace"])
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["oracle_match"] is True
    rows = list(csv.DictReader((out / "metrics.csv").open()))
    assert rows[0]["workload"] == "bitcount" and rows[0]["variant"] == "GMC"
    assert (out / "output.bin").stat().st_size == 2048
    capsys.readouterr()
    assert main(["replay", "--trace", str(out / "trace.txt"), "--config",
                 str(files / "dev.cfg")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["digest"] == summary["digest"]
    assert rep["device_total"] == summary["device_total"]


def test_bad_config_exits_2(files, capsys):
    (files / "bad.cfg").write_text("variant = BSA\nspeed = 9\n")
    rc = main(["run", "--config", str(files / "bad.cfg"), "--workload", str(files / "w.cfg"),
               "--out", str(files / "o")])
    assert rc == 2
    assert "bad.cfg:2" in capsys.readouterr().err


def test_missing_file_exits_2(files):
    assert main(["replay", "--trace", str(files / "none.txt"), "--config",
                 str(files / "dev.cfg")]) == 2


def test_bad_trace_exits_2(files, capsys):
    (files / "t.txt").write_text("0.0 ACT 0\n")
    assert main(["replay", "--trace", str(files / "t.txt"), "--config",
                 str(files / "dev.cfg")]) == 2
    assert "line 1" in capsys.readouterr().err


def test_simulation_error_exits_1(files, capsys):
    (files / "t.txt").write_text("0.0 ACT 0 0\n100.0 ACT 0 1\n")
    assert main(["replay", "--trace", str(files / "t.txt"), "--config",
                 str(files / "dev.cfg")]) == 1


def test_sweep_is_deterministic(tmp_path):
    m = tmp_path / "m.cfg"
    m.write_text("variants = BSA, GSA\nparallel = 1, 4\nworkloads = bitcount, bitwise:AND\n"
                 "bytes_per_workload = 4096\ncapacities_gb = 4, 16\n")
    outs = []
    for k, jobs in enumerate(("1", "2")):
        d = tmp_path / f"o{k}"
        assert main(["sweep", "--matrix", str(m), "--out", str(d), "--jobs", jobs]) == 0
        outs.append(d)
    for name in ("sweep.csv", "summary.csv", "bandwidth.csv"):
        assert (outs[0] / name).read_text() == (outs[1] / name).read_text()
    rows = list(csv.DictReader((outs[0] / "sweep.csv").open()))
    assert len(rows) == 8 and all(r["oracle_match"] == "1" for r in rows)
    assert "command" in json.loads((outs[0] / "manifest.json").read_text())


def test_sweep_rejects_unknown_workload(tmp_path):
    m = tmp_path / "m.cfg"
    m.write_text("workloads = sha256\n")
    assert main(["sweep", "--matrix", str(m), "--out", str(tmp_path / "o")]) == 2


def test_lut_build_and_inspect(tmp_path, capsys):
    p = tmp_path / "b.lut"
    assert main(["lut", "build", "binarize", "8", "--mask", "0x80", "--out", str(p)]) == 0
    prog = LT.load(p)
    assert prog.size == 2 and prog.masked
    capsys.readouterr()
    assert main(["lut", "inspect", str(p)]) == 0
    assert "entries" in capsys.readouterr().out


def test_lut_build_binary_to_stdout(capsys):
    assert main(["lut", "build", "add", "8", "--out-width", "5"]) == 0
    assert "0xff -> 0x1e" in capsys.readouterr().out


def test_lut_build_overflow_exits_2(capsys):
    assert main(["lut", "build", "square", "8"]) == 2
    assert "does not fit" in capsys.readouterr().err


def test_entry_point_version():
    r = subprocess.run([sys.executable, "-m", "plutosim.cli", "--version"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and r.stdout.strip().startswith("plutosim")
