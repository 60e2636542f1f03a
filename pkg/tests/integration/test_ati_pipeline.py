"""
Integration tests for ATI conditioning and entropy sweeps.
"""

import logging
from pathlib import Path

import numpy as np
import pytest

from strongcat import artifacts
from strongcat.commands import run_command
from strongcat.config import validate_config
from strongcat.phase_space import mean_photon, photon_distribution

pytestmark = pytest.mark.ati


logger = logging.getLogger(__name__)


def _local_maxima(pops: np.ndarray, floor: float = 1e-3) -> list[int]:
    """Photon numbers where P(n) is a local maximum above floor·max P."""
    cut = floor * float(pops.max())
    return [
        n for n in range(1, pops.size - 1)
        if pops[n] > cut and pops[n] > pops[n - 1] and pops[n] >= pops[n + 1]
    ]


def _ati_run(tmp_path: Path, sign: int, cep: float = 0.0) -> tuple[float, np.ndarray]:
    cfg = validate_config({
        "output_dir": str(tmp_path / f"ati_{sign:+d}_{cep:.2f}"),
        "pulse": {"cep": cep},
        "conditioning": {"mode": "ati", "momentum_sign": sign, "momentum_points": 1},
    })
    summary = run_command("condition", cfg)
    field = artifacts.read_state(Path(cfg.output_dir) / "ati_field.json")
    assert summary["mean_photon"] == pytest.approx(mean_photon(field))
    logger.info(f"ATI p sign {sign:+d}, cep {cep:.2f}: <n> = {summary['mean_photon']:.4f}")
    return summary["mean_photon"], photon_distribution(field)


@pytest.mark.integration
@pytest.mark.slow
class TestAtiMomentumAsymmetry:
    """Conditioned photon numbers of opposite photoelectron momenta at |α_L| = 7."""

    @pytest.fixture(scope="class")
    def runs(self, tmp_path_factory):
        tmp = tmp_path_factory.mktemp("ati")
        return {
            (sign, cep): _ati_run(tmp, sign, cep)
            for sign in (1, -1)
            for cep in (0.0, np.pi)
        }

    def test_opposite_momenta_straddle(self, runs):
        """Positive momentum adds photons to the 11-cycle driver, negative momentum removes them."""
        plus, minus = runs[(1, 0.0)][0], runs[(-1, 0.0)][0]
        assert plus > 49.0 > minus

    @pytest.mark.parametrize("sign", [1, -1])
    def test_two_lobes(self, runs, sign):
        """The photon distribution of either momentum has two separated maxima."""
        peaks = _local_maxima(runs[(sign, 0.0)][1])
        logger.info(f"ATI p sign {sign:+d}: P(n) maxima at {peaks}")
        assert len(peaks) >= 2
        assert peaks[-1] - peaks[0] > 8

    def test_cep_swaps_direction(self, runs):
        assert runs[(1, np.pi)][0] == pytest.approx(runs[(-1, 0.0)][0], rel=1e-6)
        assert runs[(-1, np.pi)][0] == pytest.approx(runs[(1, 0.0)][0], rel=1e-6)


@pytest.mark.integration
@pytest.mark.slow
def test_ati_mixed_state(tmp_path):
    cfg = validate_config({
        "output_dir": str(tmp_path / "out"),
        "conditioning": {"mode": "ati", "momentum_points": 3},
    })
    summary = run_command("condition", cfg)
    assert 0.0 < summary["mixed_purity"] <= 1.0
    rho = artifacts.read_density_matrix(Path(cfg.output_dir) / "ati_mixed.json")
    assert rho.trace == pytest.approx(1.0)


@pytest.mark.integration
@pytest.mark.slow
def test_linear_entropy_sweep_shape(tmp_path):
    """S_lin rises from zero, peaks inside the range and vanishes for large shifts."""
    cfg = validate_config({
        "output_dir": str(tmp_path / "out"),
        "conditioning": {"harmonic_chi": 0.3, "sweep_max": 6.0, "sweep_points": 121},
    })
    summary = run_command("sweep", cfg)
    rows = (Path(cfg.output_dir) / "linear_entropy.csv").read_text().splitlines()[1:]
    s_lin = np.array([float(r.split(",")[1]) for r in rows])
    assert s_lin[0] == pytest.approx(0.0, abs=1e-12)
    assert 0 < int(np.argmax(s_lin)) < s_lin.size - 1
    assert summary["last_s_lin"] < 1e-3


@pytest.mark.integration
@pytest.mark.slow
def test_entanglement_entropy_grows_with_energy(tmp_path):
    """Faster photoelectrons leave the field more entangled with the electron."""
    cfg = validate_config({
        "output_dir": str(tmp_path / "out"),
        "conditioning": {"sweep_kind": "energy", "omegas": [0.01], "energies_up": [1.0, 4.0, 8.0]},
    })
    run_command("sweep", cfg)
    rows = (Path(cfg.output_dir) / "entanglement_entropy.csv").read_text().splitlines()
    assert rows[0] == "omega_au,energy_up,entropy_bits"
    entropy = np.array([float(r.split(",")[2]) for r in rows[1:]])
    assert np.all(np.diff(entropy) >= 0)


@pytest.mark.integration
@pytest.mark.slow
def test_entanglement_entropy_falls_with_frequency(tmp_path):
    """At fixed 𝓔/U_p a longer carrier period leaves the field more entangled."""
    cfg = validate_config({
        "output_dir": str(tmp_path / "out"),
        "conditioning": {"sweep_kind": "energy", "omegas": [0.009, 0.010, 0.011], "energies_up": [4.0]},
    })
    run_command("sweep", cfg)
    rows = (Path(cfg.output_dir) / "entanglement_entropy.csv").read_text().splitlines()[1:]
    entropy = {float(r.split(",")[0]): float(r.split(",")[2]) for r in rows}
    assert entropy[0.009] > entropy[0.010] > entropy[0.011] > 0.0
