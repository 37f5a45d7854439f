"""Tests for the secure-cluster command line."""

import json
import socket

import pytest

from app.cli import (
    EXIT_ASSUMPTION,
    EXIT_BIND,
    EXIT_FALSE,
    EXIT_INVALID,
    EXIT_OK,
    format_float,
    main,
    parse_observed,
)

VIN = "1HGCM82633A004352"


class TestVscCommand:
    """Test ``secure-cluster vsc``."""

    @pytest.mark.parametrize(
        "snr_ab, observed, expected",
        [("3", "1,1", "1.0"), ("1", "1", "0.0")],
    )
    def test_values(self, capsys, snr_ab, observed, expected):
        """Test VSC output for known inputs."""
        assert main(["vsc", "--snr-ab", snr_ab, "--observed", observed]) == EXIT_OK
        assert capsys.readouterr().out == expected + "\n"

    def test_empty_observed(self, capsys):
        """Test an empty observation list exits 2."""
        assert main(["vsc", "--snr-ab", "3", "--observed", ""]) == EXIT_INVALID
        assert capsys.readouterr().out == ""

    def test_bad_number(self):
        """Test a non-numeric SNR exits 2."""
        assert main(["vsc", "--snr-ab", "3", "--observed", "1,x"]) == EXIT_INVALID

    def test_negative_snr(self):
        """Test a negative SNR exits 2."""
        assert main(["vsc", "--snr-ab", "3", "--observed", "1,-2"]) == EXIT_INVALID

    def test_format_float(self):
        """Test shortest round-trip float output."""
        assert format_float(1.0) == "1.0"
        assert format_float(-0.25) == "-0.25"
        assert format_float(1e-20) == "1e-20"

    def test_parse_observed(self):
        """Test parsing of the observed SNR list."""
        assert parse_observed(" ") == []
        assert parse_observed("1, 2.5") == [1.0, 2.5]


class TestChainCommands:
    """Test ``secure-cluster chain gen`` and ``chain verify``."""

    def gen(self, capsys, m: int) -> dict:
        assert main(["chain", "gen", "--vin", VIN, "--m", str(m)]) == EXIT_OK
        return json.loads(capsys.readouterr().out)

    def test_gen_then_verify(self, capsys):
        """Test a generated disclosure verifies."""
        out = self.gen(capsys, 12)
        assert out["m"] == 12
        assert len(out["value"]) == 64
        code = main(["chain", "verify", "--vin", VIN, "--m", "12", "--value", out["value"]])
        assert code == EXIT_OK
        assert capsys.readouterr().out == "true\n"

    def test_wrong_m(self, capsys):
        """Test a wrong index prints false and exits 1."""
        out = self.gen(capsys, 12)
        code = main(["chain", "verify", "--vin", VIN, "--m", "11", "--value", out["value"]])
        assert code == EXIT_FALSE
        assert capsys.readouterr().out == "false\n"

    def test_bad_vin(self, capsys):
        """Test an invalid VIN exits 2 without output."""
        assert main(["chain", "gen", "--vin", "1HGCM82633AO04352", "--m", "3"]) == EXIT_INVALID
        assert capsys.readouterr().out == ""

    def test_bad_m(self):
        """Test a zero index exits 2."""
        assert main(["chain", "gen", "--vin", VIN, "--m", "0"]) == EXIT_INVALID

    def test_bad_value(self):
        """Test a non-hex value exits 2."""
        assert main(["chain", "verify", "--vin", VIN, "--m", "1", "--value", "zz"]) == EXIT_INVALID

    def test_missing_argument(self):
        """Test a missing argument exits 2."""
        assert main(["chain", "gen", "--vin", VIN]) == EXIT_INVALID


class TestRunCommand:
    """Test ``secure-cluster run``."""

    def test_convoy(self, capsys, fixtures_dir, tmp_path):
        """Test a convoy run writes metrics and a summary."""
        code = main(["run", "--scenario", str(fixtures_dir / "convoy4.json"), "--out", str(tmp_path)])
        assert code == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["clusters_formed"] == 1
        assert (tmp_path / "metrics.json").exists()
        assert not (tmp_path / "trace.ndjson").exists()

    def test_trace_and_seed(self, capsys, fixtures_dir, tmp_path):
        """Test --trace writes the event trace."""
        args = ["run", "--scenario", str(fixtures_dir / "convoy4.json"), "--out", str(tmp_path)]
        assert main(args + ["--seed", "9", "--trace"]) == EXIT_OK
        assert (tmp_path / "trace.ndjson").exists()

    def test_malformed_json(self, capsys, fixtures_dir, tmp_path):
        """Test malformed scenario JSON reports the line."""
        code = main(["run", "--scenario", str(fixtures_dir / "malformed.json"), "--out", str(tmp_path)])
        assert code == EXIT_INVALID
        assert ":5:" in capsys.readouterr().err

    def test_invalid_field(self, capsys, fixtures_dir, tmp_path):
        """Test an invalid scenario field is named."""
        code = main(["run", "--scenario", str(fixtures_dir / "invalid_tick.json"), "--out", str(tmp_path)])
        assert code == EXIT_INVALID
        assert "tick_s" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        """Test a missing scenario file exits 2."""
        assert main(["run", "--scenario", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == EXIT_INVALID

    def test_assumption_violation(self, capsys, fixtures_dir, tmp_path):
        """Test a misplaced eavesdropper exits 3."""
        path = fixtures_dir / "eavesdropper_centroid.json"
        assert main(["run", "--scenario", str(path), "--out", str(tmp_path)]) == EXIT_ASSUMPTION
        assert "eve" in capsys.readouterr().err

    def test_unwritable_out(self, capsys, fixtures_dir, tmp_path):
        """Test an output path that is a file exits 2 with a diagnostic."""
        blocker = tmp_path / "out"
        blocker.write_text("")
        code = main(["run", "--scenario", str(fixtures_dir / "convoy4.json"), "--out", str(blocker)])
        assert code == EXIT_INVALID
        captured = capsys.readouterr()
        assert "cannot write results" in captured.err
        assert captured.out == ""


class TestServeCommand:
    """Test ``secure-cluster serve``."""

    def test_port_in_use(self, capsys):
        """Test a taken port exits 4."""
        with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as taken:
            taken.bind(("127.0.0.1", 0))
            taken.listen(1)
            port = taken.getsockname()[1]
            assert main(["serve", "--bind", "127.0.0.1", "--port", str(port)]) == EXIT_BIND
        assert "cannot bind" in capsys.readouterr().err

    @pytest.mark.parametrize("content", ["{not json", '{"vehicles": {"v00": "bad vin"}}'])
    def test_bad_registry(self, capsys, tmp_path, content):
        """Test a malformed registry file exits 2 before binding."""
        path = tmp_path / "registry.json"
        path.write_text(content)
        code = main(["serve", "--bind", "127.0.0.1", "--port", "0", "--registry", str(path)])
        assert code == EXIT_INVALID
        assert "cannot load registry" in capsys.readouterr().err
