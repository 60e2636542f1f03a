"""
Unit tests for spectrometer module.
"""

import numpy as np
import pytest

from strongcat.errors import EmptySelectionError, NumericalError, ValidationError
from strongcat.schemas import PirHistogram, QsModel, ShotTable
from strongcat.spectrometer import (
    QuantumSpectrometer,
    conditioned_pir,
    diagonal_mask,
    estimate_line_width,
    fit_anticorrelation_line,
    pearson_r,
    peak_positions,
    peak_spacing,
    select_diagonal,
    selection_precision,
    simulate_shots,
)


pytestmark = [pytest.mark.unit, pytest.mark.spectrometer]


def _table(s_hh, s_ir, is_hhg=None) -> ShotTable:
    s_hh = np.asarray(s_hh, dtype=float)
    return ShotTable(
        s_hh=s_hh,
        s_ir=np.asarray(s_ir, dtype=float),
        is_hhg=np.ones(s_hh.size, dtype=bool) if is_hhg is None else is_hhg,
        ir_mean_photons=100.0,
        hh_mean_photons=2.0,
    )


@pytest.fixture(scope="module")
def mixed_shots():
    return simulate_shots(QsModel(shots=20_000, seed=3))


@pytest.fixture(scope="module")
def correlated_shots():
    return simulate_shots(QsModel(shots=20_000, seed=4, hhg_fraction=1.0))


class TestQuantumSpectrometer:
    """Test QuantumSpectrometer class."""

    def test_init_defaults(self):
        qs = QuantumSpectrometer()
        assert qs.model.shots == 100_000
        assert qs.model.q_eff == 11.0
        assert qs.threads == 1

    def test_invalid_threads(self):
        with pytest.raises(ValidationError, match="threads must be positive"):
            QuantumSpectrometer(threads=0)

    def test_min_shots(self):
        """Test too small a shot count."""
        with pytest.raises(ValidationError, match="at least 1000 shots are required, got 500"):
            simulate_shots(QsModel(shots=500))

    def test_ir_budget(self):
        """The IR signal must exceed the mean absorbed photons."""
        with pytest.raises(ValidationError, match="must exceed the mean absorbed IR photons"):
            simulate_shots(QsModel(shots=2000, ir_mean_photons=10.0))

    def test_normalized_means(self, mixed_shots):
        assert len(mixed_shots) == 20_000
        assert mixed_shots.s_ir.mean() == pytest.approx(1.0)
        assert mixed_shots.s_hh.mean() == pytest.approx(1.0)
        assert np.all(mixed_shots.s_ir >= 0) and np.all(mixed_shots.s_hh >= 0)

    def test_hhg_fraction(self, mixed_shots):
        assert mixed_shots.is_hhg.mean() == pytest.approx(0.7, abs=0.02)

    def test_seed_reproducible(self):
        model = QsModel(shots=3000, seed=9)
        a, b = simulate_shots(model), simulate_shots(model)
        np.testing.assert_array_equal(a.s_ir, b.s_ir)
        np.testing.assert_array_equal(a.is_hhg, b.is_hhg)
        c = simulate_shots(model.model_copy(update={"seed": 10}))
        assert not np.array_equal(a.s_ir, c.s_ir)

    def test_threads_do_not_change_shots(self):
        """Chunks own their random streams, so the worker count is invisible."""
        model = QsModel(shots=20_000, seed=5)
        serial = simulate_shots(model)
        threaded = simulate_shots(model, threads=3)
        np.testing.assert_array_equal(serial.s_ir, threaded.s_ir)
        np.testing.assert_array_equal(serial.s_hh, threaded.s_hh)

    def test_continuous_mode(self):
        shots = simulate_shots(QsModel(shots=5000, discrete=False, hhg_fraction=1.0))
        assert pearson_r(shots) < -0.9


class TestAnticorrelationLine:
    """Test the total-least-squares diagonal."""

    def test_exact_line(self):
        s_hh = np.linspace(0.0, 2.0, 50)
        line = fit_anticorrelation_line(_table(s_hh, 2.0 - s_hh))
        assert line.slope == pytest.approx(-1.0)
        assert line.ir_at(0.0) == pytest.approx(2.0)
        assert line.dir_hh > 0

    def test_width_floor(self):
        """A noiseless line has the minimal width."""
        s_hh = np.linspace(0.0, 2.0, 50)
        assert estimate_line_width(_table(s_hh, 2.0 - s_hh)) == pytest.approx(1e-9)

    def test_too_few_shots(self):
        with pytest.raises(ValidationError, match="at least two shots are needed to fit a line"):
            fit_anticorrelation_line(_table([1.0], [1.0]))

    def test_vertical_cloud(self):
        with pytest.raises(ValidationError, match="shot cloud has no extent along S_HH"):
            fit_anticorrelation_line(_table(np.ones(10), np.linspace(0.0, 1.0, 10)))

    def test_correlated_slope(self, correlated_shots):
        """Correlated shots lie on a falling diagonal."""
        assert fit_anticorrelation_line(correlated_shots).slope < 0
        assert pearson_r(correlated_shots) < -0.95


class TestSelection:
    """Test diagonal selection."""

    def test_precision(self, mixed_shots):
        """Shots near the diagonal are mostly correlated ones."""
        width = estimate_line_width(mixed_shots)
        selected = select_diagonal(mixed_shots, width)
        assert len(selected) < len(mixed_shots)
        assert selection_precision(selected) >= 0.9

    def test_mask_matches_selection(self, mixed_shots):
        mask = diagonal_mask(mixed_shots, 0.05)
        assert len(select_diagonal(mixed_shots, 0.05)) == int(mask.sum())

    def test_invalid_width(self, mixed_shots):
        with pytest.raises(ValidationError, match="width must be positive"):
            select_diagonal(mixed_shots, 0.0)

    def test_empty_selection(self):
        """Test selection far narrower than any residual."""
        table = _table([0.0, 1.0, 2.0, 1.0], [2.0, 1.5, 0.0, 0.5])
        with pytest.raises(EmptySelectionError, match="no shot lies within"):
            select_diagonal(table, 1e-6)

    def test_empty_precision(self):
        with pytest.raises(EmptySelectionError, match="empty selection"):
            selection_precision(_table([], []))

    def test_pearson_too_few(self):
        with pytest.raises(ValidationError, match="at least two shots are needed for a correlation"):
            pearson_r(_table([1.0], [1.0]))

    def test_background_only_uncorrelated(self):
        """Without correlated shots the cloud carries no anticorrelation."""
        shots = simulate_shots(QsModel(shots=20_000, seed=7, hhg_fraction=0.0))
        assert abs(pearson_r(shots)) < 0.05

    def test_noiseless_shots_on_line(self):
        """Noise-free correlated shots all sit on the energy-conservation line."""
        shots = simulate_shots(QsModel(shots=5000, seed=8, hhg_fraction=1.0, noise_ir=0.0, noise_hh=0.0))
        selected = select_diagonal(shots, estimate_line_width(shots))
        assert len(selected) == len(shots)
        line = fit_anticorrelation_line(selected)
        assert np.max(line.distance(selected.s_hh, selected.s_ir)) < 1e-9
        assert line.slope == pytest.approx(-11.0 * shots.hh_mean_photons / shots.ir_mean_photons, rel=1e-9)
        assert pearson_r(selected) == pytest.approx(-1.0, abs=1e-12)

    def test_widening_trades_precision(self, mixed_shots):
        """Wider bands keep more shots and never a cleaner sample."""
        line = fit_anticorrelation_line(mixed_shots)
        base = estimate_line_width(mixed_shots, line)
        counts, precisions = [], []
        for factor in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0):
            selected = select_diagonal(mixed_shots, factor * base, line)
            counts.append(len(selected))
            precisions.append(selection_precision(selected))
        assert all(a <= b for a, b in zip(counts, counts[1:]))
        assert all(b <= a + 0.01 for a, b in zip(precisions, precisions[1:]))
        assert precisions[-1] < precisions[0]


class TestConditionedPir:
    """Test conditioned IR photon-loss statistics."""

    def test_peak_comb(self, correlated_shots):
        """Discrete H11 photons carve a comb with 11-photon spacing into P_IR."""
        line = fit_anticorrelation_line(correlated_shots)
        hist = conditioned_pir(correlated_shots, line=line)
        assert hist.probabilities.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(np.diff(hist.edges), 1.0)
        assert peak_spacing(hist) == pytest.approx(11.0, rel=0.05)

    def test_too_few_selected(self, correlated_shots):
        with pytest.raises(ValidationError, match="at least 1000 selected shots are required"):
            conditioned_pir(correlated_shots.subset(np.arange(len(correlated_shots)) < 500))

    def test_invalid_bins(self, correlated_shots):
        with pytest.raises(ValidationError, match="bin width must be positive"):
            conditioned_pir(correlated_shots, bins=0.0)

    def test_exclude_dark(self, correlated_shots):
        """Shots without harmonic signal carry the zero-loss spike."""
        line = fit_anticorrelation_line(correlated_shots)
        full = conditioned_pir(correlated_shots, line=line)
        lit = conditioned_pir(correlated_shots, line=line, exclude_dark=True)
        assert 0.0 in np.rint(peak_positions(full))
        assert lit.centers.min() > 5.0
        assert lit.probabilities.sum() == pytest.approx(1.0)

    def test_order_mixture_resolved(self):
        """Harmonic orders 11, 13 and 15 each leave their own single-photon peak."""
        shots = simulate_shots(QsModel(shots=50_000, seed=6, hhg_fraction=1.0, q_orders=[11, 13, 15]))
        line = fit_anticorrelation_line(shots)
        peaks = set(np.rint(peak_positions(conditioned_pir(shots, line=line, exclude_dark=True))).tolist())
        assert {11.0, 13.0, 15.0} <= peaks
        assert 0.0 not in peaks
        assert 12.0 not in peaks and 14.0 not in peaks

    def test_noisy_mixture_merges(self):
        """At 1% IR noise the neighbouring orders blur into one peak."""
        model = QsModel(shots=50_000, seed=6, hhg_fraction=1.0, q_orders=[11, 13, 15], noise_ir=0.01)
        shots = simulate_shots(model)
        peaks = set(np.rint(peak_positions(conditioned_pir(shots, exclude_dark=True))).tolist())
        assert not {11.0, 13.0, 15.0} <= peaks


class TestPeaks:
    """Test peak finding on P_IR histograms."""

    @pytest.fixture
    def comb(self):
        p = np.where(np.arange(60) % 5 == 0, 1.0, 0.0)
        return PirHistogram(edges=np.arange(61) - 0.5, probabilities=p / p.sum())

    def test_spacing(self, comb):
        assert peak_spacing(comb) == pytest.approx(5.0, rel=0.01)

    def test_positions(self, comb):
        positions = peak_positions(comb)
        np.testing.assert_allclose(np.mod(positions, 5.0), 0.0)
        assert positions.size >= 10

    def test_no_periodicity(self):
        """A monotone distribution has no comb."""
        p = np.linspace(1.0, 0.0, 50)
        hist = PirHistogram(edges=np.arange(51) - 0.5, probabilities=p / p.sum())
        with pytest.raises(NumericalError, match="no periodic peak structure"):
            peak_spacing(hist)
