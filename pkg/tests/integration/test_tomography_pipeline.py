"""
Integration tests for the tomography round trip.

synthesize -> sample (12 phases x 10^4 shots) -> MaxLik and back-projection.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from strongcat import artifacts
from strongcat.commands import run_command
from strongcat.config import validate_config
from strongcat.phase_space import shifted_cat, wigner_css
from strongcat.schemas import GridSpec

pytestmark = pytest.mark.tomography


CAT_GRID = {"x_min": 0.0, "x_max": 7.0, "p_min": -3.0, "p_max": 3.0, "nx": 29, "np": 25}


def _tomo(tmp_path: Path, state: dict, recon_trunc: int, grid: dict | None = None) -> tuple[dict, Path]:
    cfg = validate_config({
        "output_dir": str(tmp_path / "out"),
        "seed": 17,
        "state": state,
        "grid": grid or {"nx": 25, "np": 25},
        "tomography": {"n_trunc": recon_trunc, "max_iter": 10_000, "tol": 1e-7},
    })
    return run_command("tomo", cfg), Path(cfg.output_dir)


@pytest.fixture(scope="module")
def cat_run(tmp_path_factory):
    return _tomo(tmp_path_factory.mktemp("cat"), {"kind": "cat", "alpha": 2.0, "chi": 1.5}, 30, CAT_GRID)


@pytest.mark.integration
@pytest.mark.slow
class TestTomographyRoundTrip:
    """Reconstruction fidelity against the sampled state."""

    def test_coherent(self, tmp_path):
        summary, _ = _tomo(tmp_path, {"kind": "coherent", "alpha": 2.0}, 20)
        assert summary["converged"]
        assert summary["fidelity"] >= 0.99

    def test_squeezed(self, tmp_path):
        summary, _ = _tomo(tmp_path, {"kind": "squeezed", "alpha": 0.0, "k": 0.8}, 24)
        assert summary["fidelity"] >= 0.98

    def test_cat(self, cat_run):
        summary, _ = cat_run
        assert summary["fidelity"] >= 0.98

    def test_likelihood_non_decreasing(self, cat_run):
        _, out = cat_run
        rows = (out / "likelihood.csv").read_text().splitlines()[1:]
        history = np.array([float(r.split(",")[1]) for r in rows])
        assert np.all(np.diff(history) >= -1e-9 * np.abs(history[1:]))

    def test_back_projection_sign(self, cat_run):
        """Back-projected cat reproduces the sign of the exact Wigner function."""
        _, out = cat_run
        grid = artifacts.read_wigner(out / "wigner_radon.csv")
        spec = GridSpec.model_validate(CAT_GRID)
        x, p = np.meshgrid(spec.x, spec.p)
        exact = wigner_css(shifted_cat(2.0, 1.5), (x + 1j * p) / np.sqrt(2.0))
        cells = np.abs(exact) > 0.05
        agreement = np.mean(np.sign(grid.values[cells]) == np.sign(exact[cells]))
        assert agreement >= 0.9

    def test_report(self, cat_run):
        summary, out = cat_run
        report = json.loads((out / "report.json").read_text())
        assert report["fidelity"] == summary["fidelity"]
        assert report["n_trunc"] == 30
        assert report["truth"].startswith("cat")


@pytest.mark.integration
def test_vacuum_reconstruction(tmp_path):
    """Vacuum data reconstructs to ρ_00 ≥ 0.99."""
    cfg = validate_config({
        "output_dir": str(tmp_path / "out"),
        "state": {"kind": "fock", "n": 0},
        "grid": {"nx": 5, "np": 5},
        "tomography": {"n_trunc": 6, "shots_per_phase": 1000, "max_iter": 5000, "tol": 1e-7},
    })
    run_command("tomo", cfg)
    rho = artifacts.read_density_matrix(Path(cfg.output_dir) / "rho.json")
    assert rho.elements[0, 0].real >= 0.99
