"""
Unit tests for artifacts module.
"""

import json

import numpy as np
import pytest

from strongcat.artifacts import (
    echo_config,
    fmt,
    read_density_matrix,
    read_json,
    read_state,
    read_trace,
    read_wigner,
    write_dipole,
    write_manifest,
    write_pir,
    write_rows,
    write_shots,
    write_spectrum,
    write_state,
    write_trace,
    write_wigner,
)
from strongcat.config import RunConfig, load_config
from strongcat.errors import MissingInputError, ValidationError
from strongcat.phase_space import fock_state, normalize_css, shifted_cat, wigner_css, wigner_grid
from strongcat.schemas import (
    DensityMatrix,
    DipoleSeries,
    EntangledMultimodeState,
    GridSpec,
    HarmonicShiftSet,
    HomodyneTrace,
    MultimodeBranch,
    PirHistogram,
    ShotTable,
)


pytestmark = [pytest.mark.unit, pytest.mark.cli]


class TestCsvFormat:
    """Test the byte-level CSV format."""

    def test_fmt(self):
        """Floats carry 17 significant digits."""
        assert fmt(0.1) == "0.10000000000000001"
        assert fmt(1.0) == "1"
        assert float(fmt(np.pi)) == np.pi

    def test_line_endings(self, tmp_path):
        path = write_rows(tmp_path / "rows.csv", ["a", "b"], [(1.5, "x"), (2, np.float64(0.25))])
        assert path.read_bytes() == b"a,b\n1.5,x\n2,0.25\n"

    def test_creates_parent(self, tmp_path):
        path = write_rows(tmp_path / "deep" / "nested" / "rows.csv", ["a"], [])
        assert path.read_text() == "a\n"


class TestJson:
    """Test JSON helpers."""

    def test_missing(self, tmp_path):
        """Test missing input file."""
        with pytest.raises(MissingInputError, match="input file not found"):
            read_json(tmp_path / "absent.json")

    def test_malformed(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ValidationError, match="is not valid JSON"):
            read_json(path)


class TestWignerFiles:
    """Test Wigner grid files."""

    def test_round_trip(self, tmp_path):
        cat = shifted_cat(2.0, 1.5)
        grid = wigner_grid(lambda b: wigner_css(cat, b), GridSpec(nx=7, np=5), "cat")
        csv_path, meta_path = write_wigner(grid, tmp_path / "w.csv")
        again = read_wigner(csv_path)
        np.testing.assert_array_equal(again.values, grid.values)
        np.testing.assert_array_equal(again.x, grid.x)
        assert again.descriptor == "cat"
        meta = json.loads(meta_path.read_text())
        assert meta["nx"] == 7 and meta["np"] == 5
        assert meta["min"] == pytest.approx(grid.values.min())

    def test_layout(self, tmp_path):
        """Header row holds x, first column p."""
        grid = wigner_grid(lambda b: wigner_css(shifted_cat(0.0, 1.0), b), GridSpec(nx=3, np=2))
        path, _ = write_wigner(grid, tmp_path / "w.csv")
        lines = path.read_text().splitlines()
        assert lines[0].split(",")[0] == "p\\x"
        assert len(lines) == 3
        assert len(lines[1].split(",")) == 4


class TestStateFiles:
    """Test state documents."""

    def test_superposition(self, tmp_path):
        cat = normalize_css(shifted_cat(2.0, 1.5 + 0.5j))
        again = read_state(write_state(cat, tmp_path / "cat.json"))
        np.testing.assert_array_equal(again.coeffs, cat.coeffs)
        np.testing.assert_array_equal(again.alphas, cat.alphas)

    def test_multimode(self, tmp_path):
        state = EntangledMultimodeState(
            branches=(MultimodeBranch(alphas=[1.0, 0.5j]), MultimodeBranch(coeff=-0.3, alphas=[0.8, 0.0])),
            orders=(1.0, 3.0),
            weight=0.25,
            provenance={"conditioning": "hhg"},
        )
        path = write_state(state, tmp_path / "state.json")
        assert json.loads(path.read_text())["kind"] == "multimode"
        again = read_state(path)
        np.testing.assert_array_equal(again.alpha_matrix, state.alpha_matrix)
        assert again.weight == 0.25
        assert again.provenance == {"conditioning": "hhg"}

    def test_density_matrix_from_vector(self, tmp_path):
        """A Fock vector is read back as its projector."""
        path = write_state(fock_state(1, 4), tmp_path / "psi.json")
        rho = read_density_matrix(path)
        assert rho.n_trunc == 4
        assert rho.elements[1, 1] == pytest.approx(1.0)

    def test_density_matrix_rejects_superposition(self, tmp_path):
        path = write_state(shifted_cat(1.0, 1.0), tmp_path / "cat.json")
        with pytest.raises(ValidationError, match="does not hold a Fock-basis state"):
            read_density_matrix(path)

    def test_unknown_kind(self, tmp_path):
        path = tmp_path / "state.json"
        path.write_text('{"kind": "teapot"}')
        with pytest.raises(ValidationError, match="'kind' must be one of"):
            read_state(path)

    def test_invalid_document(self, tmp_path):
        path = tmp_path / "state.json"
        path.write_text('{"kind": "density", "elements": "nope"}')
        with pytest.raises(ValidationError, match="invalid DensityMatrix"):
            read_state(path)

    def test_missing(self, tmp_path):
        with pytest.raises(MissingInputError):
            read_state(tmp_path / "absent.json")


class TestTraceFiles:
    """Test homodyne trace files."""

    def test_round_trip(self, tmp_path):
        trace = HomodyneTrace(
            phases=[0.0, np.pi / 3],
            samples=(np.array([0.1, -0.2]), np.array([1.0 / 3.0])),
            seed=4,
            provenance={"eta": "1"},
        )
        csv_path, sidecar = write_trace(trace, tmp_path / "trace.csv")
        assert csv_path.read_text().splitlines()[0] == "phi,x"
        assert json.loads(sidecar.read_text())["shots"] == [2, 1]
        again = read_trace(csv_path)
        np.testing.assert_array_equal(again.phases, trace.phases)
        np.testing.assert_array_equal(again.samples[1], trace.samples[1])
        assert again.seed == 4
        assert again.provenance == {"eta": "1"}

    def test_without_sidecar(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("phi,x\n0,0.5\n0,0.25\n1.5,-1\n")
        trace = read_trace(path)
        assert trace.seed is None
        assert [s.size for s in trace.samples] == [2, 1]

    def test_wrong_columns(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("theta,q\n0,1\n")
        with pytest.raises(ValidationError, match=r"expected columns \(phi, x\)"):
            read_trace(path)

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("phi,x\n0,abc\n")
        with pytest.raises(ValidationError, match="malformed row"):
            read_trace(path)

    def test_empty(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("")
        with pytest.raises(ValidationError, match="is empty"):
            read_trace(path)

    def test_missing(self, tmp_path):
        """Test missing trace file."""
        with pytest.raises(MissingInputError, match="input file not found"):
            read_trace(tmp_path / "absent.csv")


class TestOtherArtifacts:
    """Test dipole, spectrum, shot and histogram files."""

    def test_dipole(self, tmp_path):
        path = write_dipole(DipoleSeries(t=[0.0, 1.0], d=[0.0, 0.5], omega_L=0.057), tmp_path / "d.csv")
        assert path.read_text() == "t_au,d_au\n0,0\n1,0.5\n"

    def test_spectrum(self, tmp_path):
        path = write_spectrum(HarmonicShiftSet(chi=[0.5, 1j]), tmp_path / "s.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "q,power,phase"
        assert lines[1] == "1,0.25,0"
        assert lines[2].startswith("2,1,1.5707963267948966")

    def test_shots(self, tmp_path):
        shots = ShotTable(s_ir=[1.0, 0.5], s_hh=[0.5, 1.5], is_hhg=[True, False],
                          ir_mean_photons=10.0, hh_mean_photons=2.0)
        path = write_shots(shots, np.array([True, False]), tmp_path / "shots.csv")
        assert path.read_text() == "s_ir,s_hh,selected,truth\n1,0.5,1,hhg\n0.5,1.5,0,background\n"

    def test_pir(self, tmp_path):
        hist = PirHistogram(edges=[-0.5, 0.5, 1.5], probabilities=[0.25, 0.75])
        path = write_pir(hist, tmp_path / "pir.csv")
        assert path.read_text().splitlines()[1:] == ["-0.5,0.5,0,0.25", "0.5,1.5,1,0.75"]


class TestManifest:
    """Test the run manifest and configuration echo."""

    def test_manifest(self, tmp_path):
        cfg = RunConfig(seed=3)
        out = tmp_path / "out"
        files = [write_rows(out / "b.csv", ["a"], []), write_rows(out / "a.csv", ["a"], [])]
        path = write_manifest(out, "wigner", cfg, files, 1.23456789, {"fidelity": 0.99})
        doc = json.loads(path.read_text())
        assert doc["command"] == "wigner"
        assert doc["files"] == ["a.csv", "b.csv"]
        assert doc["config_hash"] == cfg.config_hash()
        assert doc["seed"] == 3
        assert doc["wall_clock_seconds"] == 1.234568
        assert set(doc["versions"]) == {"strongcat", "numpy", "scipy", "pydantic"}
        assert doc["summary"] == {"fidelity": 0.99}

    def test_config_echo_loads_back(self, tmp_path):
        """The echoed configuration is a valid --config input."""
        cfg = RunConfig(seed=8)
        path = echo_config(cfg, tmp_path)
        assert load_config(path).config_hash() == cfg.config_hash()

    def test_density_matrix_file_round_trip(self, tmp_path):
        rho = DensityMatrix.thermal(0.5, 5)
        again = read_density_matrix(write_state(rho, tmp_path / "rho.json"))
        np.testing.assert_array_equal(again.elements, rho.elements)
