import json
import subprocess
import sys

import numpy as np
import pytest

from bisaddle import problem_from_spec
from bisaddle.cli import main


def write_config(tmp_path, **overrides):
    data = dict(seed=3, dx=8, dy=6, Lx=20.0, Ly=20.0, mux=1.0, muy=1.0,
                normA=5.0, solver="dppa", eps=1e-8, max_outer=100,
                out_path=str(tmp_path / "trace.csv"))
    data.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path, data


class TestGen:
    def test_writes_problem_json(self, tmp_path):
        out = tmp_path / "problem.json"
        code = main([
            "gen", "--seed", "7", "--dx", "4", "--dy", "3", "--Lx", "2.0",
            "--Ly", "1.0", "--mux", "0.5", "--muy", "0.25", "--normA", "1.5",
            "--out", str(out),
        ])
        assert code == 0
        spec = json.loads(out.read_text())
        problem = problem_from_spec(spec)
        assert problem.dx == 4 and problem.dy == 3


class TestRun:
    def test_happy_path(self, tmp_path, capsys):
        cfg_path, data = write_config(tmp_path)
        code = main(["run", "--config", str(cfg_path)])
        assert code == 0
        assert (tmp_path / "trace.csv").exists()
        out = capsys.readouterr().out
        assert "pass" in out and "worst-slack" in out

    def test_seed_override_changes_trace(self, tmp_path):
        cfg_path, data = write_config(tmp_path)
        main(["run", "--config", str(cfg_path)])
        first = (tmp_path / "trace.csv").read_bytes()
        main(["run", "--config", str(cfg_path), "--seed", "99"])
        second = (tmp_path / "trace.csv").read_bytes()
        assert first != second

    def test_bad_config_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"seed": 1, "bogus": True}))
        assert main(["run", "--config", str(path)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_file_exits_2(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2

    def test_usage_error_exits_2(self):
        with pytest.raises(SystemExit) as err:
            main(["run"])  # --config is required
        assert err.value.code == 2


class TestVerify:
    def test_recertifies_trace(self, tmp_path, capsys):
        cfg_path, data = write_config(tmp_path)
        main(["run", "--config", str(cfg_path)])
        capsys.readouterr()
        code = main(["verify", "--trace", data["out_path"], "--which", "dppa"])
        assert code == 0
        out = capsys.readouterr().out
        assert "worst-slack" in out and "pass dppa" in out

    def test_detects_tampering(self, tmp_path, capsys):
        cfg_path, data = write_config(tmp_path, solver="dippa", eps=1e-6)
        main(["run", "--config", str(cfg_path)])
        lines = open(data["out_path"]).read().split("\n")
        # inflate a recorded distance far beyond the certified bound
        row = lines[2].split(",")
        row[6] = "1e12"
        lines[2] = ",".join(row)
        open(data["out_path"], "w").write("\n".join(lines))
        capsys.readouterr()
        assert main(["verify", "--trace", data["out_path"]]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_unknown_monitor_exits_2(self, tmp_path, capsys):
        cfg_path, data = write_config(tmp_path)
        main(["run", "--config", str(cfg_path)])
        assert main(["verify", "--trace", data["out_path"],
                     "--which", "bogus"]) == 2


class TestSeparateProcesses:
    def test_byte_identical_across_invocations(self, tmp_path):
        cfg_path, data = write_config(tmp_path, solver="dippa", eps=1e-6,
                                      max_outer=60)
        cmd = [sys.executable, "-m", "bisaddle.cli", "run",
               "--config", str(cfg_path)]
        assert subprocess.run(cmd, capture_output=True).returncode == 0
        first = (tmp_path / "trace.csv").read_bytes()
        assert subprocess.run(cmd, capture_output=True).returncode == 0
        assert (tmp_path / "trace.csv").read_bytes() == first


class TestCurves:
    def test_writes_table(self, tmp_path):
        out = tmp_path / "curves.csv"
        code = main([
            "curves", "--Lx", "100", "--Ly", "100", "--mux", "1",
            "--muy", "10", "--grid", "1:1000:log50", "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "normA,this_paper,wang,lin,nesterov,lower"
        assert len(lines) == 51
        rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        for col in range(rows.shape[1]):
            assert (np.diff(rows[:, col]) >= -1e-12).all()

    def test_stdout_when_no_out(self, capsys):
        assert main(["curves", "--Lx", "10", "--Ly", "10", "--mux", "1",
                     "--muy", "1", "--grid", "1:10:lin3"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("normA,")

    def test_bad_grid_exits_2(self, capsys):
        assert main(["curves", "--Lx", "10", "--Ly", "10", "--mux", "1",
                     "--muy", "1", "--grid", "nope"]) == 2
