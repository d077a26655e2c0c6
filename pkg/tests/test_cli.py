"""Command-line driver: exit codes, file outputs, config handling, determinism."""

import json
from pathlib import Path

import pytest

from lorenzhist.cli import dump_config, load_config, main


def run(argv):
    return main(argv)


class TestWitnessCommand:
    def test_success_writes_files(self, tmp_path):
        code = run([
            "witness", "--x0", "0.33", "--N", "10", "--eps", "0.1",
            "--out-dir", str(tmp_path),
        ])
        assert code == 0
        cert = json.loads((tmp_path / "certificate.json").read_text())
        assert cert["schema"] == "lhw-1"
        assert cert["N"] == 10
        series = (tmp_path / "series.csv").read_text().splitlines()
        assert "t,A" in series
        data_rows = [l for l in series if l and not l.startswith("#") and l != "t,A"]
        assert len(data_rows) > 100

    def test_eps_out_of_range(self, tmp_path):
        assert run(["witness", "--x0", "0.33", "--N", "10", "--eps", "1.5",
                    "--out-dir", str(tmp_path)]) == 1

    def test_gamma_point(self, tmp_path):
        assert run(["witness", "--x0", "0", "--N", "10", "--eps", "0.1",
                    "--out-dir", str(tmp_path)]) == 1

    def test_determinism_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert run(["witness", "--x0", "0.41", "--N", "5", "--eps", "0.2",
                        "--out-dir", str(d)]) == 0
        assert (a / "certificate.json").read_bytes() == (b / "certificate.json").read_bytes()
        assert (a / "series.csv").read_bytes() == (b / "series.csv").read_bytes()


class TestSimulateCommand:
    def test_random_start(self, tmp_path):
        code = run(["simulate", "--x0", "0.437", "--horizon", "50",
                    "--out-dir", str(tmp_path)])
        assert code == 0
        rows = (tmp_path / "orbit.csv").read_text().splitlines()
        data = [r for r in rows if r and not r.startswith("#") and not r.startswith("t_start")]
        starts = [float(r.split(",")[0]) for r in data]
        assert starts == sorted(starts)

    def test_periodic_start_zero_series(self, tmp_path):
        code = run(["simulate", "--x0", "per2", "--horizon", "50",
                    "--out-dir", str(tmp_path)])
        assert code == 0
        rows = (tmp_path / "series.csv").read_text().splitlines()
        vals = [float(r.split(",")[1]) for r in rows
                if r and not r.startswith("#") and r != "t,A"]
        assert vals and all(v == 0.0 for v in vals)

    def test_zero_horizon(self, tmp_path):
        code = run(["simulate", "--x0", "0.5", "--horizon", "0",
                    "--out-dir", str(tmp_path)])
        assert code == 0
        rows = (tmp_path / "series.csv").read_text().splitlines()
        assert rows[-1] == "t,A"


class TestDeepenCommand:
    def test_invalid_levels(self, tmp_path):
        assert run(["deepen", "--levels", "0", "--out-dir", str(tmp_path)]) == 1

    def test_two_levels(self, tmp_path):
        code = run(["deepen", "--levels", "2", "--N", "4", "--eps", "0.2",
                    "--x0", "0.41", "--out-dir", str(tmp_path)])
        assert code == 0
        chain = json.loads((tmp_path / "chain.json").read_text())
        assert len(chain) == 2
        assert chain[1]["N"] == 2 * chain[0]["N"]


class TestCoverCommand:
    def test_small_cover(self, tmp_path):
        code = run(["cover", "--N", "3", "--m", "4", "--grid", "3",
                    "--out-dir", str(tmp_path)])
        assert code == 0
        docs = json.loads((tmp_path / "cover.json").read_text())
        assert len(docs) == 3


class TestConfig:
    def test_round_trip(self, tmp_path):
        cfg_text = "eta = 0.04\nmode = strict\nprecision_bits = 256\n"
        path = tmp_path / "run.cfg"
        path.write_text(cfg_text)
        cfg = load_config(str(path))
        assert cfg == {"eta": 0.04, "mode": "strict", "precision_bits": 256}
        dumped = dump_config(cfg)
        path2 = tmp_path / "run2.cfg"
        path2.write_text(dumped)
        assert load_config(str(path2)) == cfg

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("nonsense = 1\n")
        from lorenzhist.cli import UsageError
        with pytest.raises(UsageError):
            load_config(str(path))

    def test_comments_and_blanks(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# header\n\neta = 0.03  # inline\n")
        assert load_config(str(path)) == {"eta": 0.03}

    def test_config_alters_run(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("eta = 0.03\n")
        code = run(["--config", str(path), "witness", "--x0", "0.33",
                    "--N", "5", "--eps", "0.1", "--out-dir", str(tmp_path)])
        assert code == 0
        cert = json.loads((tmp_path / "certificate.json").read_text())
        assert cert["params"]["eta"] == 0.03
