"""
Unit tests for schemas module.
"""

import numpy as np
import pytest
from pydantic import ValidationError as PydanticValidationError

from strongcat.schemas import (
    AnticorrelationLine,
    CoherentAmplitude,
    CoherentSuperposition,
    DensityMatrix,
    ElectronTag,
    EntangledMultimodeState,
    FockVector,
    GridSpec,
    HarmonicShiftSet,
    HomodyneTrace,
    LaserPulse,
    MultimodeBranch,
    PirHistogram,
    QsModel,
    ShotTable,
    WignerGrid,
)


pytestmark = pytest.mark.unit


class TestCoherentAmplitude:
    """Test CoherentAmplitude schema."""

    def test_quadrature_centre(self):
        """x0 = √2·Re α and p0 = √2·Im α."""
        a = CoherentAmplitude.of(1.0 + 2.0j)
        assert a.x0 == pytest.approx(np.sqrt(2.0))
        assert a.p0 == pytest.approx(2.0 * np.sqrt(2.0))
        assert a.mean_photon == pytest.approx(5.0)

    def test_of_is_idempotent(self):
        """Wrapping an amplitude returns it unchanged."""
        a = CoherentAmplitude(re=0.5, im=-0.5)
        assert CoherentAmplitude.of(a) is a

    def test_frozen(self):
        """Amplitudes are immutable."""
        a = CoherentAmplitude(re=1.0)
        with pytest.raises(PydanticValidationError):
            a.re = 2.0

    def test_rejects_nan(self):
        """Non-finite parts are rejected."""
        with pytest.raises(PydanticValidationError):
            CoherentAmplitude(re=float("nan"))


class TestFockVector:
    """Test FockVector schema."""

    def test_properties(self):
        """Norm, truncation and leakage."""
        v = FockVector(coeffs=[0.6, 0.0, 0.8j])
        assert v.n_trunc == 3
        assert v.norm == pytest.approx(1.0)
        assert v.leakage == pytest.approx(0.64)

    def test_normalized(self):
        v = FockVector(coeffs=[3.0, 4.0]).normalized()
        assert v.norm == pytest.approx(1.0)

    def test_empty_rejected(self):
        """Test empty coefficient vector."""
        with pytest.raises(PydanticValidationError, match="coeffs must be a non-empty vector"):
            FockVector(coeffs=[])

    def test_arrays_are_read_only(self):
        """Stored arrays cannot be modified in place."""
        v = FockVector(coeffs=[1.0, 0.0])
        with pytest.raises(ValueError):
            v.coeffs[0] = 2.0

    def test_json_round_trip(self):
        """Complex arrays survive JSON serialization."""
        v = FockVector(coeffs=[0.6, 0.8j])
        again = FockVector.model_validate(v.model_dump(mode="json"))
        np.testing.assert_allclose(again.coeffs, v.coeffs)


class TestCoherentSuperposition:
    """Test CoherentSuperposition schema."""

    def test_from_branches(self):
        css = CoherentSuperposition.from_branches([(1.0, 2.0), (-0.5, CoherentAmplitude(re=1.0))], label="x")
        assert css.n_branches == 2
        assert css.branches[1][1].re == 1.0

    def test_length_mismatch(self):
        """Test coefficient/amplitude mismatch."""
        with pytest.raises(PydanticValidationError):
            CoherentSuperposition(coeffs=[1.0, 1.0], alphas=[0.0])


class TestGridSpec:
    """Test GridSpec schema."""

    def test_alias(self):
        """Both 'np' and 'np_' populate the p sample count."""
        assert GridSpec(np=11).np_ == 11
        assert GridSpec(np_=13).np_ == 13

    def test_bounds(self):
        """Test decreasing bounds."""
        with pytest.raises(PydanticValidationError, match="grid bounds must be increasing"):
            GridSpec(x_min=1.0, x_max=-1.0)

    def test_beta_orientation(self):
        """β is indexed [p, x]."""
        spec = GridSpec(x_min=-1, x_max=1, p_min=0, p_max=2, nx=3, np=5)
        beta = spec.beta()
        assert beta.shape == (5, 3)
        assert beta[0, 2] == pytest.approx((1.0 + 0.0j) / np.sqrt(2.0))
        assert beta[4, 0] == pytest.approx((-1.0 + 2.0j) / np.sqrt(2.0))

    def test_centered(self):
        """A centred grid is symmetric around √2·α."""
        spec = GridSpec.centered(1.0 + 1.0j, half_width=2.0, n=5)
        assert (spec.x_min + spec.x_max) / 2 == pytest.approx(np.sqrt(2.0))
        assert (spec.p_min + spec.p_max) / 2 == pytest.approx(np.sqrt(2.0))


class TestWignerGrid:
    """Test WignerGrid schema."""

    def test_shape_check(self):
        """Test mismatched value shape."""
        with pytest.raises(PydanticValidationError, match=r"values must have shape"):
            WignerGrid(x=[0, 1, 2], p=[0, 1], values=np.zeros((3, 2)))

    def test_integral_measure(self):
        """Integral uses d²β = dx·dp/2."""
        grid = WignerGrid(x=[0.0, 1.0], p=[0.0, 2.0], values=np.ones((2, 2)))
        assert grid.integral() == pytest.approx(4 * 1.0 * 2.0 / 2.0)

    def test_moments(self):
        """Moments of a two-point distribution."""
        values = np.array([[1.0, 0.0], [0.0, 1.0]])
        grid = WignerGrid(x=[-1.0, 1.0], p=[-1.0, 1.0], values=values)
        m = grid.moments()
        assert m["mean_x"] == pytest.approx(0.0)
        assert m["var_x"] == pytest.approx(1.0)


class TestDensityMatrix:
    """Test DensityMatrix schema."""

    def test_from_vector(self):
        """A pure state has unit trace and purity."""
        rho = DensityMatrix.from_vector(FockVector(coeffs=[1.0, 1.0j]))
        assert rho.trace == pytest.approx(1.0)
        assert rho.purity == pytest.approx(1.0)
        assert rho.is_physical()

    def test_thermal(self):
        """Thermal state of mean 1 has purity 1/3 in the untruncated limit."""
        rho = DensityMatrix.thermal(1.0, 60)
        assert rho.trace == pytest.approx(1.0)
        assert rho.purity == pytest.approx(1.0 / 3.0, rel=1e-6)

    def test_mixture(self):
        """Equal mixture of two orthogonal states."""
        rho = DensityMatrix.mixture([FockVector(coeffs=[1, 0]), FockVector(coeffs=[0, 1])], [1, 1])
        np.testing.assert_allclose(rho.elements, 0.5 * np.eye(2))

    def test_non_square(self):
        """Test non-square elements."""
        with pytest.raises(PydanticValidationError, match="elements must be a non-empty square matrix"):
            DensityMatrix(elements=np.zeros((2, 3)))

    def test_unphysical(self):
        """Negative eigenvalues are detected."""
        rho = DensityMatrix(elements=np.diag([1.5, -0.5]))
        assert not rho.is_physical()


class TestLaserPulse:
    """Test LaserPulse schema."""

    def test_grid(self):
        pulse = LaserPulse(F0=0.05, omega_L=0.057, n_cycles=2, steps_per_cycle=64)
        assert pulse.n_steps == 128
        assert pulse.t_grid.size == 129
        assert pulse.dt == pytest.approx(pulse.period / 64)

    def test_up(self):
        """U_p = F0²/(4ω²)."""
        pulse = LaserPulse(F0=0.1, omega_L=0.05, n_cycles=1)
        assert pulse.up == pytest.approx(1.0)

    def test_negative_field(self):
        with pytest.raises(PydanticValidationError):
            LaserPulse(F0=-0.1, omega_L=0.05, n_cycles=1)


class TestMultimodeStates:
    """Test HarmonicShiftSet and EntangledMultimodeState."""

    def test_shift_set(self):
        shifts = HarmonicShiftSet(chi=[0.1, 0.2j, 0.0])
        assert shifts.n_c == 3
        np.testing.assert_array_equal(shifts.orders, [1, 2, 3])
        assert shifts.chi_of(2) == 0.2j
        assert shifts.power[1] == pytest.approx(0.04)

    def test_mode_count_check(self):
        """Every branch carries one amplitude per mode."""
        with pytest.raises(PydanticValidationError, match="one amplitude per mode"):
            EntangledMultimodeState(branches=(MultimodeBranch(alphas=[1.0]),), orders=(1.0, 3.0))

    def test_accessors(self):
        state = EntangledMultimodeState(
            branches=(MultimodeBranch(coeff=1.0, alphas=[1.0, 0.5]), MultimodeBranch(coeff=-0.5, alphas=[2.0, 0.0])),
            orders=(1.0, 3.0),
        )
        assert state.alpha_matrix.shape == (2, 2)
        np.testing.assert_allclose(state.amplitudes, [1.0, -0.5])
        assert state.mode_index(3.0) == 1
        with pytest.raises(KeyError):
            state.mode_index(5.0)

    def test_json_round_trip(self):
        """Multimode states validate back from their JSON dump."""
        state = EntangledMultimodeState(
            branches=(MultimodeBranch(coeff=0.5 + 0.5j, alphas=[1.0 + 1.0j, 0.2]),),
            orders=(1.0, 3.0),
            provenance={"conditioning": "hhg"},
        )
        again = EntangledMultimodeState.model_validate(state.model_dump(mode="json"))
        np.testing.assert_allclose(again.alpha_matrix, state.alpha_matrix)
        np.testing.assert_allclose(again.amplitudes, state.amplitudes)

    def test_branch_phase(self):
        """The composition phase enters the amplitude."""
        b = MultimodeBranch(coeff=2.0, alphas=[0.0], phase=np.pi / 2)
        assert b.amplitude == pytest.approx(2.0j)


class TestElectronTag:
    """Test ElectronTag schema."""

    def test_from_energy(self):
        """Energy in U_p maps to momentum and back."""
        tag = ElectronTag.from_energy(2.0, up=0.5, sign=-1)
        assert tag.v == pytest.approx(-np.sqrt(2.0))
        assert tag.energy_up(0.5) == pytest.approx(2.0)


class TestHomodyneTrace:
    """Test HomodyneTrace schema."""

    def test_counts(self):
        trace = HomodyneTrace(phases=[0.0, 1.0], samples=([0.1, 0.2], [0.3]))
        assert trace.total_samples == 3
        assert trace.entries[1][0] == 1.0

    def test_length_mismatch(self):
        """Test phases without samples."""
        with pytest.raises(PydanticValidationError, match="one sample vector per phase"):
            HomodyneTrace(phases=[0.0, 1.0], samples=([0.1],))


class TestShotSchemas:
    """Test ShotTable, AnticorrelationLine, PirHistogram and QsModel."""

    def test_subset_and_records(self):
        table = ShotTable(s_ir=[1.0, 0.9, 1.1], s_hh=[1.0, 1.2, 0.8], is_hhg=[1, 0, 1],
                          ir_mean_photons=200.0, hh_mean_photons=2.5)
        sub = table.subset(np.array([True, False, True]))
        assert len(sub) == 2
        assert sub.ir_mean_photons == 200.0
        assert [r.truth for r in table.records()] == ["hhg", "background", "hhg"]

    def test_column_lengths(self):
        """Test unequal columns."""
        with pytest.raises(PydanticValidationError, match="equal-length"):
            ShotTable(s_ir=[1.0], s_hh=[1.0, 2.0], is_hhg=[True], ir_mean_photons=1.0, hh_mean_photons=1.0)

    def test_line_geometry(self):
        """Distance and intercept of a line of slope −1 through (1, 1)."""
        d = np.array([1.0, -1.0]) / np.sqrt(2.0)
        line = AnticorrelationLine(center_hh=1.0, center_ir=1.0, dir_hh=d[0], dir_ir=d[1])
        assert line.slope == pytest.approx(-1.0)
        assert line.ir_at(0.0) == pytest.approx(2.0)
        assert line.distance(np.array([0.0]), np.array([0.0]))[0] == pytest.approx(np.sqrt(2.0))

    def test_histogram_centers(self):
        hist = PirHistogram(edges=[-0.5, 0.5, 1.5], probabilities=[0.25, 0.75])
        np.testing.assert_allclose(hist.centers, [0.0, 1.0])

    def test_qs_weights(self):
        """Weights default to uniform and are normalized."""
        assert QsModel(q_orders=[9, 11]).weights.tolist() == [0.5, 0.5]
        np.testing.assert_allclose(QsModel(q_orders=[9, 11], q_weights=[1, 3]).weights, [0.25, 0.75])

    def test_qs_effective_order(self):
        """q_eff is the weighted mean order."""
        assert QsModel(q_orders=[9, 11], q_weights=[1, 3]).q_eff == pytest.approx(10.5)

    def test_qs_invalid_orders(self):
        with pytest.raises(PydanticValidationError, match="q_orders must be positive harmonic orders"):
            QsModel(q_orders=[0])
        with pytest.raises(PydanticValidationError, match="q_weights must be nonnegative"):
            QsModel(q_orders=[9, 11], q_weights=[1.0])
