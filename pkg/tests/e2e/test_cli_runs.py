"""
End-to-end tests for the strongcat command line.

Every test drives cli.main with real arguments and inspects the output directory.
Problem sizes are kept small; the SFA is bypassed with --chi1/--harmonic-chi where it
is not the subject of the test.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from strongcat.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main

pytestmark = pytest.mark.cli


SMALL = ["--threads", "2"]


def _csv_bytes(out: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))}


def _summary(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


@pytest.mark.e2e
class TestCommandLine:
    """One run per subcommand."""

    def test_wigner(self, tmp_path, capsys):
        out = tmp_path / "wigner"
        code = main(["--out", str(out), "wigner", "--state", "cat", "--alpha", "2", "--chi", "1.5",
                     "--phases", "6", "--shots-per-phase", "500", *SMALL])
        assert code == EXIT_OK
        summary = _summary(capsys)
        assert summary["integral"] == pytest.approx(1.0, abs=1e-3)
        assert {"wigner.csv", "marginals.csv", "trace.csv", "state.json", "run.json"} <= {p.name for p in out.iterdir()}

    def test_condition_then_wigner_of_cat(self, tmp_path, capsys):
        """The conditioned cat is a valid --state file input."""
        cond = tmp_path / "cond"
        assert main(["condition", "--out", str(cond), "--chi1", "-0.5", "--harmonic-chi", "0.3"]) == EXIT_OK
        capsys.readouterr()
        code = main(["--out", str(tmp_path / "w"), "wigner", "--state", "file",
                     "--state-file", str(cond / "cat.json"), "--phases", "2", "--shots-per-phase", "10"])
        assert code == EXIT_OK
        assert _summary(capsys)["descriptor"] == "file(cat.json)"

    def test_tomo_from_trace(self, tmp_path, capsys):
        """A trace written by wigner is reconstructed by tomo --input."""
        w = tmp_path / "w"
        assert main(["--out", str(w), "wigner", "--state", "coherent", "--alpha", "1",
                     "--phases", "12", "--shots-per-phase", "2000"]) == EXIT_OK
        capsys.readouterr()
        code = main(["--out", str(tmp_path / "t"), "tomo", "--state", "coherent", "--alpha", "1",
                     "--input", str(w / "trace.csv"), "--recon-trunc", "12", "--tol", "1e-7", "--max-iter", "3000"])
        assert code == EXIT_OK
        summary = _summary(capsys)
        assert summary["fidelity"] >= 0.95
        assert not (tmp_path / "t" / "trace.csv").exists()

    def test_qs(self, tmp_path, capsys):
        assert main(["qs", "--shots", "20000", "--seed", "3", "--out", str(tmp_path)]) == EXIT_OK
        summary = _summary(capsys)
        assert summary["precision"] >= 0.9
        assert (tmp_path / "pir.csv").is_file()

    def test_sweep(self, tmp_path, capsys):
        code = main(["sweep", "--out", str(tmp_path), "--harmonic-chi", "0.3", "--chi-max", "6", "--points", "25"])
        assert code == EXIT_OK
        assert _summary(capsys)["points"] == 25

    def test_zero_field_hhg(self, tmp_path, capsys):
        assert main(["hhg", "--intensity", "0", "--out", str(tmp_path)]) == EXIT_OK
        assert _summary(capsys)["note"] == "zero field: empty spectrum"


@pytest.mark.e2e
class TestExitCodes:
    """Failures map onto documented exit codes."""

    def test_usage(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["wigner", "--state", "teapot"])
        assert exc.value.code == EXIT_USAGE

    def test_configuration(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("tomography:\n  eta: 1.5\n")
        assert main(["--config", str(path), "--out", str(tmp_path), "tomo"]) == EXIT_USAGE

    def test_numerical(self, tmp_path):
        code = main(["condition", "--out", str(tmp_path), "--mode", "xuv-cat", "--q", "3",
                     "--chi1", "0", "--harmonic-chi", "0"])
        assert code == EXIT_NUMERICAL

    def test_module_entry_point(self):
        result = subprocess.run([sys.executable, "-m", "strongcat", "--help"], capture_output=True, text=True)
        assert result.returncode == 0
        assert "wigner" in result.stdout


@pytest.mark.e2e
class TestReproducibility:
    """Re-running from the echoed config and seed reproduces every CSV byte for byte."""

    @pytest.mark.parametrize(
        "argv",
        [
            ["wigner", "--state", "squeezed", "--alpha", "0.5", "--k", "0.4", "--phases", "4", "--shots-per-phase", "300"],
            ["condition", "--chi1", "0.4-0.2j", "--harmonic-chi", "0.3"],
            ["qs", "--shots", "5000"],
        ],
        ids=["wigner", "condition", "qs"],
    )
    def test_rerun_from_echo(self, tmp_path, capsys, argv):
        first = tmp_path / "first"
        assert main(["--seed", "42", "--out", str(first), *argv]) == EXIT_OK
        second = tmp_path / "second"
        assert main(["--config", str(first / "config.json"), "--out", str(second), argv[0]]) == EXIT_OK
        capsys.readouterr()
        assert _csv_bytes(first) == _csv_bytes(second)
        assert json.loads((first / "run.json").read_text())["config_hash"] != ""

    def test_threads_do_not_change_outputs(self, tmp_path, capsys):
        argv = ["qs", "--shots", "20000", "--seed", "5"]
        assert main([*argv, "--out", str(tmp_path / "one"), "--threads", "1"]) == EXIT_OK
        assert main([*argv, "--out", str(tmp_path / "four"), "--threads", "4"]) == EXIT_OK
        capsys.readouterr()
        assert _csv_bytes(tmp_path / "one") == _csv_bytes(tmp_path / "four")
