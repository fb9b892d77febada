import json
import subprocess
import sys

import pytest

from lnnrl.cli import main
from lnnrl.harness import CSV_COLUMNS

TOML = 'method = "{m}"\nlength = 4\ndistractors = 1\nepisodes = 3\nmax_steps = 20\n'


@pytest.fixture
def configs(tmp_path):
    paths = {}
    for m in ("baseline", "shield", "guide"):
        paths[m] = tmp_path / f"{m}.toml"
        paths[m].write_text(TOML.format(m=m))
    return paths


def test_run_writes_csv(configs, tmp_path, capsys):
    out = tmp_path / "run.csv"
    trace = tmp_path / "trace.jsonl"
    assert main(["run", "--config", str(configs["shield"]), "--out", str(out), "--trace", str(trace)]) == 0
    assert out.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert trace.read_text().strip()
    assert "shield: 3 episodes" in capsys.readouterr().out


def test_run_to_stdout(configs, capsys):
    assert main(["run", "--config", str(configs["guide"])]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 4


def test_compare_then_summarize(configs, tmp_path, capsys):
    out = tmp_path / "cmp"
    args = ["compare", "--seeds", "2", "--out", str(out), "--gnuplot"]
    for m, p in configs.items():
        args += [f"--{m}", str(p)]
    assert main(args) == 0
    text = capsys.readouterr().out
    assert "baseline" in text and "guide" in text
    assert (out / "plot.gp").exists()
    assert main(["summarize", "--in", str(out), "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report == json.loads((out / "summary.json").read_text())
    assert main(["summarize", "--in", str(out / "curves.csv"), "--threshold", "0.5", "--window", "2"]) == 0
    assert "N=2" in capsys.readouterr().out


def test_errors_exit_2(configs, tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("speed = 3\n")
    assert main(["run", "--config", str(bad)]) == 2
    assert "speed" in capsys.readouterr().err
    mismatched = tmp_path / "g.toml"
    mismatched.write_text(TOML.format(m="guide").replace("length = 4", "length = 5"))
    args = ["compare", "--baseline", str(configs["baseline"]), "--shield", str(configs["shield"]),
            "--guide", str(mismatched), "--seeds", "1", "--out", str(tmp_path / "x")]
    assert main(args) == 2
    assert "length" in capsys.readouterr().err
    assert main(["summarize", "--in", str(tmp_path / "missing")]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "lnnrl", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "summarize" in res.stdout
