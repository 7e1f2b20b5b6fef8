import pytest
import json
import sys
import os

# Thêm src vào path
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

import pandas as pd

from check_run import RunChecker, read_run
from cli import EXIT_CHECK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_OK, EXIT_OVERFLOW, main
from heisenberg import critical_q


SHORT_RUN = """
[protocol]
kind = "mathieu"
a_bar = 6.0
q_bar = 0.5

[thermal]
nbar = 0.35

[simulation]
tau_end = 6.0
samples = 200
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestCritical:

    def test_table(self, capsys):
        assert main(["critical", "--nbar", "0,0.35,1"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "nbar,critical_q,critical_squeeze,temperature_k"
        values = [float(x) for x in lines[2].split(",")]
        assert values[0] == 0.35
        assert values[1] == pytest.approx(critical_q(0.35), rel=1e-12)
        assert values[3] == pytest.approx(1.42e-4, rel=0.02)

    def test_negative_nbar(self):
        assert main(["critical", "--nbar=-0.1"]) == EXIT_CONFIG
        assert main(["critical", "--nbar=abc"]) == EXIT_CONFIG


class TestThermal:

    def test_reference_trap(self, capsys):
        assert main(["thermal", "--w0", "4e6", "--temp", "1.42e-4"]) == EXIT_OK
        out = dict(line.split(" = ") for line in capsys.readouterr().out.strip().splitlines())
        assert float(out["nbar"]) == pytest.approx(0.35, rel=0.02)
        assert float(out["e0_over_hbar_w0"]) == pytest.approx(float(out["nbar"]) + 0.5, rel=1e-9)

    def test_negative_temperature(self):
        assert main(["thermal", "--w0", "4e6", "--temp=-1e-4"]) == EXIT_CONFIG


class TestClassicality:

    def test_to_file(self, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["classicality", "--nbar", "0,0.35", "--points", "11", "--out", str(out)]) == EXIT_OK
        table = pd.read_csv(out)
        assert len(table) == 22
        assert table["classicality"].iloc[0] == 0.0

    def test_invalid_range(self):
        assert main(["classicality", "--nbar", "0.35", "--q-max", "0.5"]) == EXIT_CONFIG


class TestSimulate:

    def test_run_and_rerun(self, tmp_path, capsys):
        config = _write(tmp_path, "run.toml", SHORT_RUN)
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        summary = tmp_path / "summary.json"
        assert main(["simulate", "--config", str(config), "--out", str(first),
                     "--summary-json", str(summary)]) == EXIT_OK
        assert "max_q_star = " in capsys.readouterr().out
        assert main(["simulate", "--config", str(config), "--out", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()
        data = json.loads(summary.read_text(encoding="utf-8"))
        assert data["min_classicality"] > 0
        metadata, frame = read_run(first)
        assert metadata["summary"] == data
        assert len(frame) == 200

    def test_output_from_config(self, tmp_path):
        text = SHORT_RUN + '\n[output]\npath = "results/run.csv"\nsummary_json = "results/summary.json"\n'
        config = _write(tmp_path, "run.toml", text)
        assert main(["simulate", "--config", str(config)]) == EXIT_OK
        assert (tmp_path / "results" / "run.csv").exists()
        assert json.loads((tmp_path / "results" / "summary.json").read_text(encoding="utf-8"))["max_q_star"] >= 1

    def test_missing_output_path(self, tmp_path):
        config = _write(tmp_path, "run.toml", SHORT_RUN)
        assert main(["simulate", "--config", str(config)]) == EXIT_CONFIG

    def test_missing_config(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "none.toml"),
                     "--out", str(tmp_path / "x.csv")]) == EXIT_CONFIG

    def test_overflow(self, tmp_path):
        text = SHORT_RUN.replace("a_bar = 6.0", "a_bar = 1.0").replace("q_bar = 0.5", "q_bar = 0.2")
        text = text.replace("tau_end = 6.0", "tau_end = 400.0")
        config = _write(tmp_path, "grow.toml", text)
        out = tmp_path / "grow.csv"
        assert main(["simulate", "--config", str(config), "--out", str(out)]) == EXIT_OVERFLOW
        assert not out.exists()

    def test_negative_frequency(self, tmp_path):
        text = SHORT_RUN.replace("a_bar = 6.0", "a_bar = 1.0").replace("q_bar = 0.5", "q_bar = -0.6")
        config = _write(tmp_path, "bad.toml", text)
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "x.csv")]) == EXIT_INTEGRATION

    def test_degenerate_mathieu(self, tmp_path):
        text = SHORT_RUN.replace("a_bar = 6.0", "a_bar = 2.0").replace("q_bar = 0.5", "q_bar = 1.0")
        config = _write(tmp_path, "degenerate.toml", text)
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "x.csv")]) == EXIT_CONFIG


class TestScan:

    def test_deterministic(self, tmp_path):
        config = _write(tmp_path, "scan.toml",
                        "[scan]\na_min = 0.0\na_max = 4.0\na_points = 9\nq_min = 0.0\nq_max = 1.0\nq_points = 3\n")
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["-q", "scan", "--config", str(config), "--out", str(first)]) == EXIT_OK
        assert main(["-q", "scan", "--config", str(config), "--out", str(second), "--workers", "2"]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()
        frame = pd.read_csv(first)
        assert len(frame) == 27
        assert set(frame["classification"]) <= {"Stable", "Marginal", "Unstable"}


class TestCheck:

    def _simulate(self, tmp_path):
        config = _write(tmp_path, "run.toml", SHORT_RUN)
        out = tmp_path / "run.csv"
        assert main(["simulate", "--config", str(config), "--out", str(out)]) == EXIT_OK
        return out

    def test_valid_run(self, tmp_path):
        out = self._simulate(tmp_path)
        assert main(["check", str(out)]) == EXIT_OK
        findings = RunChecker(out).check()
        assert findings["ok"]
        assert findings["max_wronskian_residual"] <= 1e-9

    def test_corrupted_run(self, tmp_path):
        out = self._simulate(tmp_path)
        metadata, frame = read_run(out)
        frame.loc[100, "u"] = frame.loc[100, "u"] * 1.01
        frame.to_csv(out, index=False)
        assert main(["check", str(out)]) == EXIT_CHECK

    def test_missing_columns(self, tmp_path):
        out = self._simulate(tmp_path)
        _, frame = read_run(out)
        frame.drop(columns=["q2_bar"]).to_csv(out, index=False)
        assert main(["check", str(out)]) == EXIT_CHECK

    def test_missing_file(self, tmp_path):
        assert main(["check", str(tmp_path / "none.csv")]) == EXIT_CHECK


if __name__ == "__main__":
    pytest.main([__file__])
