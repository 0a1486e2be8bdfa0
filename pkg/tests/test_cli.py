import csv
import os

import numpy as np
import pytest

from plcqkd import config as cfgmod
from plcqkd.cli import main
from plcqkd.exceptions import ConfigError

FAST = ["--set", "scan.duration_s=0.2", "--set", "link.scramble_samples=16"]


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestConfig:
    def test_defaults_build(self):
        rc = cfgmod.load_run_config()
        assert rc.link.pulses_per_point == 5_000_000
        assert rc.link.fibre.scramble
        assert rc.link.bob_mzi.t_long == pytest.approx(10 ** -0.8)

    def test_file_and_overrides(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("# comment\nfibre.length_km = 10\nbob_mzi.t_long_db = 3.0\n")
        rc = cfgmod.load_run_config(p, ["bob_mzi.t_long_db=4"])
        assert rc.link.fibre.length_km == 10.0
        assert rc.values["bob_mzi.t_long_db"] == 4.0

    @pytest.mark.parametrize("item,path", [
        ("alice_mzi.r_in=1.5", "alice_mzi.r_in"),
        ("detectors.dark_prob_per_gate=1", "detectors.dark_prob_per_gate"),
        ("source.mu=abc", "source.mu"),
        ("bogus.key=1", "bogus.key"),
        ("bob_mzi.delay_slots=2", "bob_mzi.delay_slots"),
        ("detectors.gate_width_s=1e-8", "detectors.gate_width_s"),
    ])
    def test_errors_name_field(self, item, path):
        with pytest.raises(ConfigError) as e:
            cfgmod.load_run_config(None, [item])
        assert e.value.path == path

    def test_echo_round_trips(self):
        rc = cfgmod.load_run_config(None, ["fibre.length_km=12.5", "scan.t1_start_k=300.01",
                                           "alice_mzi.unbalance_delta_rad=0.1", "detectors.gated_slots=1"])
        again = cfgmod.resolve(cfgmod.parse_text(rc.echo()))
        assert again == rc.values


class TestCommands:
    def test_fringe_scan_outputs(self, tmp_path, capsys):
        assert main(["fringe-scan", "--out", str(tmp_path)] + FAST) == 0
        with open(tmp_path / "fringe.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t1_K", "phase_rad", "counts_p0", "counts_p1", "expected_p0", "expected_p1"]
        assert len(rows) == 50
        summary = (tmp_path / "summary.txt").read_text()
        assert "visibility_p0 = " in summary and "visibility_p1 = " in summary
        echoed = summary.split("[config]\n", 1)[1]
        assert cfgmod.resolve(cfgmod.parse_text(echoed))["scan.duration_s"] == 0.2

    def test_byte_identical_across_runs_and_workers(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["fringe-scan", "--out", str(a), "--seed", "17"] + FAST) == 0
        assert main(["fringe-scan", "--out", str(b), "--seed", "17", "--set", "scan.workers=4"] + FAST) == 0
        assert _read(a / "fringe.csv") == _read(b / "fringe.csv")
        assert main(["bb84", "--out", str(a), "--pulses", "20000", "--seed", "3"]) == 0
        assert main(["bb84", "--out", str(b), "--pulses", "20000", "--seed", "3", "--set", "scan.workers=3",
                     "--set", "bb84.batch_size=100000"]) == 0
        assert _read(a / "records.csv") == _read(b / "records.csv")
        assert _read(a / "key.hex") == _read(b / "key.hex")

    def test_missing_config(self, tmp_path, capsys):
        missing = tmp_path / "nope.cfg"
        assert main(["fringe-scan", "--config", str(missing)]) == 2
        assert str(missing) in capsys.readouterr().err

    def test_bad_value_exit_code(self, capsys):
        assert main(["fringe-scan", "--set", "fibre.length_km=-1"]) == 2
        assert "fibre.length_km" in capsys.readouterr().err

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["fringe-scan", "--out", str(blocker / "sub")] + FAST) == 3

    def test_bb84_zero_pulses(self):
        assert main(["bb84", "--pulses", "0"]) == 2

    def test_bb84_ideal_time_qber_zero(self, tmp_path):
        ideal = ["--set", "detectors.dark_prob_per_gate=0", "--set", "alice_mzi.t_long_db=0",
                 "--set", "bob_mzi.t_long_db=0", "--set", "alice_mzi.overlap=1", "--set", "bob_mzi.overlap=1",
                 "--set", "source.mu=1"]
        assert main(["bb84", "--out", str(tmp_path), "--pulses", "50000"] + ideal) == 0
        report = (tmp_path / "report.txt").read_text()
        assert "qber_time = 0.0\n" in report
        alice, bob = (tmp_path / "key.hex").read_text().splitlines()
        assert alice.startswith("alice = ") and bob.startswith("bob = ")

    def test_bb84_default_phase_qber(self, tmp_path):
        assert main(["bb84", "--out", str(tmp_path), "--pulses", "1000000"]) == 0
        vals = dict(line.split(" = ") for line in (tmp_path / "report.txt").read_text().split("\n\n")[0].splitlines())
        q, n = float(vals["qber_phase"]), int(vals["phase_bits"])
        pred = float(vals["qber_phase_expected"])
        # dark counts add errors on top of (1 - V) / 2
        assert pred > float(vals["qber_phase_predicted"])
        assert abs(q - pred) < 3 * np.sqrt(pred * (1 - pred) / n)

    def test_pol_sweep(self, tmp_path):
        assert main(["pol-sweep", "--out", str(tmp_path), "--delta-steps", "4",
                     "--set", "sweep.n_polarisations=10000"]) == 0
        with open(tmp_path / "pol_sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4
        assert float(rows[0]["v_min_measured"]) == pytest.approx(1.0, abs=1e-12)
        assert float(rows[0]["v_min_analytic"]) == 1.0
        assert float(rows[2]["delta_rad"]) == pytest.approx(np.pi / 3)
        assert float(rows[2]["v_min_analytic"]) == pytest.approx(0.5, abs=1e-12)
        for r in rows:
            assert abs(float(r["v_min_measured"]) - float(r["v_min_analytic"])) < 1e-3
