from __future__ import annotations

import json
import subprocess
import sys

import pytest

from asyperiod.cli import (EXIT_DIVERGENCE, EXIT_OK, EXIT_PROPERTY, EXIT_USAGE, main,
                           parse)

FAST = ["--points-side", "300", "--burn-in", "300", "--res", "256"]


def _csv_body(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    return meta, lines[1:]


class TestUsage:
    def test_unknown_command(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["bogus"])
        assert err.value.code == EXIT_USAGE

    def test_missing_required(self):
        with pytest.raises(SystemExit) as err:
            main(["support", "--alpha", "0.5"])
        assert err.value.code == EXIT_USAGE

    def test_invalid_params(self, tmp_path):
        assert main(["support", "--alpha", "0.5", "--beta", "3.0",
                     "--out", str(tmp_path / "s")]) == EXIT_USAGE

    def test_bad_config_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"nonsense": 1}))
        assert main(["--config", str(cfg), "tent"]) == EXIT_USAGE

    def test_unreadable_config(self, tmp_path):
        assert main(["--config", str(tmp_path / "missing.json"), "tent"]) == EXIT_USAGE

    def test_config_defaults(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"burn-in": 123, "res": 64}))
        args = parse(["--config", str(cfg), "support", "--alpha", "0.5", "--beta", "1.1",
                      "--res", "32"])
        # explicit flags beat the config file
        assert args.burn_in == 123 and args.res == 32

    def test_full_scale_flag(self):
        args = parse(["support", "--alpha", "0.5", "--beta", "1.1", "--paper-scale"])
        assert (args.points_side, args.burn_in, args.res) == (1000, 500, 1024)


class TestSupport:
    def test_pgm(self, tmp_path, capsys):
        out = tmp_path / "s"
        assert main(["support", "--alpha", "0.57", "--beta", "1.1", "--out", str(out)]
                    + FAST) == EXIT_OK
        side = json.loads((tmp_path / "s.json").read_text())
        assert side["schema"] == "asyperiod/1" and side["period"] == 5
        assert side["config"]["alpha"] == 0.57
        pgm = (tmp_path / "s.pgm").read_text().splitlines()
        assert pgm[0] == "P2" and pgm[1].startswith("# {")
        assert json.loads(capsys.readouterr().out)["period"] == 5

    def test_csv(self, tmp_path):
        out = tmp_path / "s"
        assert main(["support", "--alpha", "0.57", "--beta", "1.1", "--format", "csv",
                     "--out", str(out)] + FAST) == EXIT_OK
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines[0] == "ix,iy,x,y,count,component"

    def test_divergence(self, tmp_path):
        out = tmp_path / "d"
        assert main(["support", "--alpha", "2.5", "--beta", "1.2", "--out", str(out)]
                    + FAST) == EXIT_DIVERGENCE
        assert json.loads((tmp_path / "d.json").read_text())["status"] == "divergent"

    def test_deterministic(self, tmp_path):
        for name in ("a", "b"):
            main(["support", "--alpha", "0.57", "--beta", "1.1",
                  "--out", str(tmp_path / name)] + FAST)
        # headers differ only by the output path
        body = [(tmp_path / f"{n}.pgm").read_text().splitlines()[2:] for n in "ab"]
        assert body[0] == body[1]
        a = json.loads((tmp_path / "a.json").read_text())
        b = json.loads((tmp_path / "b.json").read_text())
        a.pop("data_file"), b.pop("data_file")
        a["config"].pop("out"), b["config"].pop("out")
        assert a == b


class TestScan:
    def test_rows(self, tmp_path):
        out = tmp_path / "scan.csv"
        assert main(["scan", "--beta", "1.1", "--alphas", "0.57,0.25", "--farey-check",
                     "--out", str(out)] + FAST) == EXIT_OK
        meta, lines = _csv_body(out.read_text())
        assert meta["command"] == "scan"
        assert lines[0] == "alpha,period,components,escaped_fraction,status,farey"
        assert lines[1].split(",")[1] == "5" and lines[2].split(",")[1] == "1"

    def test_empty_range(self, capsys):
        assert main(["scan", "--beta", "1.1", "--from", "1", "--to", "0"]) == EXIT_OK
        _, lines = _csv_body(capsys.readouterr().out)
        assert len(lines) == 1

    def test_divergent_row(self, capsys):
        assert main(["scan", "--beta", "1.2", "--alphas", "2.5"] + FAST) == EXIT_OK
        _, lines = _csv_body(capsys.readouterr().out)
        assert lines[1].endswith("divergent")


class TestOther:
    def test_threshold_command(self, capsys):
        assert main(["table1", "--betas", "1.2,1.05"]) == EXIT_OK
        _, lines = _csv_body(capsys.readouterr().out)
        assert lines[0] == "beta,ell,alpha_star,status"
        assert lines[1].split(",")[1] == "4" and lines[2].split(",")[1] == "8"

    def test_tent(self, capsys):
        assert main(["tent", "--betas", "1.3"]) == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["all_match"] and out["rows"][0]["detected"] == 2

    def test_spectrum_identity(self, capsys):
        assert main(["spectrum", "--map", "identity", "--res", "3"]) == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["period"] == 1 and out["r"] == 3
        assert main(["spectrum", "--map", "identity", "--res", "1"]) == EXIT_USAGE

    def test_spectrum_stilde(self, tmp_path):
        out = tmp_path / "sp.json"
        assert main(["spectrum", "--alpha", "0.57", "--beta", "1.1", "--res", "100",
                     "--out", str(out)]) == EXIT_OK
        d = json.loads(out.read_text())
        assert d["period"] == 5 and d["stationary_vs_cycle_l1"] < 0.05

    def test_selftest_fault(self, tmp_path):
        out, cex = tmp_path / "r.json", tmp_path / "cex.json"
        code = main(["bv-selftest", "--trials", "5", "--inject-fault", "homogeneity",
                     "--out", str(out), "--counterexamples", str(cex)])
        assert code == EXIT_PROPERTY
        assert json.loads(out.read_text())["failures"]["homogeneity"] > 0
        assert json.loads(cex.read_text())["counterexamples"]["homogeneity"]

    def test_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "asyperiod.cli", "--version"],
                             capture_output=True, text=True)
        assert res.returncode == 0 and res.stdout.strip()
