"""
Pydantic models for strongcat domain objects.

These schemas provide strongly typed, immutable data structures shared by every
module: single-mode states, pulses and dipoles, multimode branch states,
homodyne traces and quantum-spectrometer shots.

Conventions used throughout:
- Quadratures x = (a + a†)/√2, p = (a − a†)/(i√2); a coherent amplitude is α = (x0 + i·p0)/√2.
- Wigner values use the 2/π peak convention over β = (x + ip)/√2.
- Time, field and energy quantities of pulses and atoms are in atomic units.
"""

from typing import Annotated, Any, Literal

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, model_validator

WIGNER_CONVENTION = "x=(a+a†)/√2"


def _frozen_array(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def _as_real_array(value: Any) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("array contains non-finite values")
    return _frozen_array(arr)


def _as_complex_array(value: Any) -> np.ndarray:
    if isinstance(value, dict):
        arr = np.asarray(value["re"], dtype=float) + 1j * np.asarray(value["im"], dtype=float)
    else:
        arr = np.asarray(value, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise ValueError("array contains non-finite values")
    return _frozen_array(arr)


def _as_complex(value: Any) -> complex:
    if isinstance(value, dict):
        return complex(float(value["re"]), float(value["im"]))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def _complex_array_json(arr: np.ndarray) -> dict[str, list]:
    return {"re": np.real(arr).tolist(), "im": np.imag(arr).tolist()}


RealArray = Annotated[np.ndarray, BeforeValidator(_as_real_array), PlainSerializer(lambda a: a.tolist(), return_type=list)]
ComplexArray = Annotated[np.ndarray, BeforeValidator(_as_complex_array), PlainSerializer(_complex_array_json, return_type=dict)]
Complex = Annotated[
    complex,
    BeforeValidator(_as_complex),
    PlainSerializer(lambda z: {"re": z.real, "im": z.imag}, return_type=dict, when_used="json"),
]


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


# ---------------------------------------------------------------------------
# Phase space
# ---------------------------------------------------------------------------


class CoherentAmplitude(_Frozen):
    """
    Complex amplitude α = |α|e^{iθ} of a coherent state.

    Attributes:
        re: Real part of α (dimensionless quadrature units)
        im: Imaginary part of α (dimensionless quadrature units)
    """
    re: float = Field(default=0.0, allow_inf_nan=False, description="Real part of α")
    im: float = Field(default=0.0, allow_inf_nan=False, description="Imaginary part of α")

    @classmethod
    def of(cls, value: "complex | float | CoherentAmplitude") -> "CoherentAmplitude":
        if isinstance(value, CoherentAmplitude):
            return value
        z = complex(value)
        return cls(re=z.real, im=z.imag)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @property
    def x0(self) -> float:
        return float(np.sqrt(2.0) * self.re)

    @property
    def p0(self) -> float:
        return float(np.sqrt(2.0) * self.im)

    @property
    def theta(self) -> float:
        return float(np.angle(self.value))

    @property
    def mean_photon(self) -> float:
        return self.re**2 + self.im**2


class FockVector(_Frozen):
    """
    Pure single-mode state in a truncated Fock basis.

    Attributes:
        coeffs: Amplitudes ⟨n|ψ⟩ for n = 0..n_trunc-1
    """
    coeffs: ComplexArray = Field(description="Fock amplitudes ⟨n|ψ⟩")

    @model_validator(mode="after")
    def _check_shape(self) -> "FockVector":
        if self.coeffs.ndim != 1 or self.coeffs.size == 0:
            raise ValueError("coeffs must be a non-empty vector")
        return self

    @property
    def n_trunc(self) -> int:
        return int(self.coeffs.size)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    @property
    def leakage(self) -> float:
        """Population of the last retained Fock level."""
        return float(np.abs(self.coeffs[-1]) ** 2)

    def normalized(self) -> "FockVector":
        return FockVector(coeffs=self.coeffs / self.norm)


class SqueezeParams(_Frozen):
    """
    Displaced squeezed vacuum D(α)S(k)|0⟩; k > 0 squeezes the x quadrature.

    Attributes:
        k: Squeezing parameter
        alpha: Displacement amplitude
    """
    k: float = Field(default=0.0, allow_inf_nan=False, description="Squeezing parameter")
    alpha: CoherentAmplitude = Field(default_factory=CoherentAmplitude, description="Displacement")


class CoherentSuperposition(_Frozen):
    """
    Finite superposition Σ_i c_i|α_i⟩ of single-mode coherent states.

    Attributes:
        coeffs: Branch coefficients c_i
        alphas: Branch amplitudes α_i
        label: Optional descriptor carried into exported metadata
    """
    coeffs: ComplexArray = Field(description="Branch coefficients")
    alphas: ComplexArray = Field(description="Branch coherent amplitudes")
    label: str | None = Field(default=None, description="State descriptor")

    @model_validator(mode="after")
    def _check_branches(self) -> "CoherentSuperposition":
        if self.coeffs.ndim != 1 or self.coeffs.shape != self.alphas.shape or self.coeffs.size == 0:
            raise ValueError("coeffs and alphas must be non-empty vectors of equal length")
        return self

    @classmethod
    def from_branches(cls, branches: list[tuple[complex, complex]], label: str | None = None) -> "CoherentSuperposition":
        coeffs = [complex(c) for c, _ in branches]
        alphas = [CoherentAmplitude.of(a).value for _, a in branches]
        return cls(coeffs=coeffs, alphas=alphas, label=label)

    @property
    def branches(self) -> list[tuple[complex, CoherentAmplitude]]:
        return [(complex(c), CoherentAmplitude.of(a)) for c, a in zip(self.coeffs, self.alphas)]

    @property
    def n_branches(self) -> int:
        return int(self.coeffs.size)


class GridSpec(_Frozen):
    """
    Rectangular (x, p) sampling grid.

    Attributes:
        x_min, x_max: x quadrature interval
        p_min, p_max: p quadrature interval
        nx, np_: Number of samples along x and p
    """
    x_min: float = Field(default=-6.0, description="Lower x bound")
    x_max: float = Field(default=6.0, description="Upper x bound")
    p_min: float = Field(default=-6.0, description="Lower p bound")
    p_max: float = Field(default=6.0, description="Upper p bound")
    nx: int = Field(default=121, ge=2, description="Samples along x")
    np_: int = Field(default=121, ge=2, alias="np", description="Samples along p")

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    @model_validator(mode="after")
    def _check_bounds(self) -> "GridSpec":
        if self.x_max <= self.x_min or self.p_max <= self.p_min:
            raise ValueError("grid bounds must be increasing")
        return self

    @classmethod
    def centered(cls, center: complex = 0.0, half_width: float = 6.0, n: int = 121) -> "GridSpec":
        x0, p0 = np.sqrt(2.0) * complex(center).real, np.sqrt(2.0) * complex(center).imag
        return cls(x_min=x0 - half_width, x_max=x0 + half_width, p_min=p0 - half_width,
                   p_max=p0 + half_width, nx=n, np=n)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.np_)

    def beta(self) -> np.ndarray:
        """β = (x + ip)/√2 on the grid, shape (np, nx)."""
        xx, pp = np.meshgrid(self.x, self.p)
        return (xx + 1j * pp) / np.sqrt(2.0)


class WignerGrid(_Frozen):
    """
    Sampled Wigner function; values[i, j] is W at (x[j], p[i]).

    Attributes:
        x: x quadrature samples
        p: p quadrature samples
        values: Wigner values, shape (len(p), len(x))
        descriptor: State descriptor for exported metadata
        convention: Quadrature convention tag
    """
    x: RealArray = Field(description="x samples")
    p: RealArray = Field(description="p samples")
    values: RealArray = Field(description="Wigner values indexed [p, x]")
    descriptor: str = Field(default="", description="State descriptor")
    convention: str = Field(default=WIGNER_CONVENTION, description="Quadrature convention tag")

    @model_validator(mode="after")
    def _check_shape(self) -> "WignerGrid":
        if self.values.shape != (self.p.size, self.x.size):
            raise ValueError("values must have shape (len(p), len(x))")
        return self

    @property
    def nx(self) -> int:
        return int(self.x.size)

    @property
    def np_(self) -> int:
        return int(self.p.size)

    @property
    def x_range(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    @property
    def p_range(self) -> tuple[float, float]:
        return float(self.p[0]), float(self.p[-1])

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    def integral(self) -> float:
        """Riemann sum over d²β = dx·dp/2."""
        return float(np.sum(self.values) * self.dx * self.dp / 2.0)

    def moments(self) -> dict[str, float]:
        """Mean and variance of x and p under the (normalized) grid distribution."""
        w = self.values / np.sum(self.values)
        xx, pp = np.meshgrid(self.x, self.p)
        mx, mp = float(np.sum(w * xx)), float(np.sum(w * pp))
        return {
            "mean_x": mx,
            "mean_p": mp,
            "var_x": float(np.sum(w * (xx - mx) ** 2)),
            "var_p": float(np.sum(w * (pp - mp) ** 2)),
        }


class DensityMatrix(_Frozen):
    """
    Fock-basis density operator.

    Attributes:
        elements: Matrix elements ρ_nm, shape (n_trunc, n_trunc)
        basis: Basis tag (always "fock")
    """
    elements: ComplexArray = Field(description="Matrix elements ρ_nm")
    basis: Literal["fock"] = Field(default="fock", description="Basis tag")

    @model_validator(mode="after")
    def _check_square(self) -> "DensityMatrix":
        e = self.elements
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.shape[0] == 0:
            raise ValueError("elements must be a non-empty square matrix")
        return self

    @classmethod
    def from_vector(cls, state: "FockVector") -> "DensityMatrix":
        c = state.coeffs / state.norm
        return cls(elements=np.outer(c, c.conj()))

    @classmethod
    def mixture(cls, states: list["FockVector"], weights: list[float] | np.ndarray) -> "DensityMatrix":
        w = np.asarray(weights, dtype=float)
        w = w / w.sum()
        rho = sum(wi * np.outer(s.coeffs / s.norm, (s.coeffs / s.norm).conj()) for wi, s in zip(w, states))
        return cls(elements=rho)

    @classmethod
    def thermal(cls, mean: float, n_trunc: int) -> "DensityMatrix":
        n = np.arange(n_trunc)
        pops = mean**n / (1.0 + mean) ** (n + 1)
        return cls(elements=np.diag(pops / pops.sum()).astype(complex))

    @property
    def n_trunc(self) -> int:
        return int(self.elements.shape[0])

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.elements)))

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.elements @ self.elements)))

    def is_physical(self, atol: float = 1e-10) -> bool:
        e = self.elements
        if not np.allclose(e, e.conj().T, atol=1e-12):
            return False
        if abs(self.trace - 1.0) > atol:
            return False
        return bool(np.linalg.eigvalsh(e).min() >= -atol)


# ---------------------------------------------------------------------------
# Strong-field layer
# ---------------------------------------------------------------------------


class LaserPulse(_Frozen):
    """
    Linearly polarized driving pulse defined through its vector potential.

    A(t) = −(F0/ω)·f(t)·sin(ω(t − T/2) + cep) on t ∈ [0, T], T = 2π·n_cycles/ω,
    and E(t) = −dA/dt. The envelope f is one of sin², gaussian or flat-top.

    Attributes:
        F0: Peak electric field (a.u.)
        omega_L: Carrier frequency (a.u.)
        n_cycles: Number of optical cycles spanned by the pulse window
        cep: Carrier-envelope phase (rad)
        envelope: Envelope shape
        steps_per_cycle: Samples per optical cycle of the uniform time grid
    """
    F0: float = Field(ge=0.0, description="Peak field (a.u.)")
    omega_L: float = Field(gt=0.0, description="Carrier frequency (a.u.)")
    n_cycles: float = Field(gt=0.0, description="Optical cycles in the pulse window")
    cep: float = Field(default=0.0, description="Carrier-envelope phase (rad)")
    envelope: Literal["sin2", "gaussian", "flat"] = Field(default="sin2", description="Envelope shape")
    steps_per_cycle: int = Field(default=128, ge=8, description="Time samples per optical cycle")

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega_L

    @property
    def duration(self) -> float:
        return self.n_cycles * self.period

    @property
    def n_steps(self) -> int:
        return int(round(self.n_cycles * self.steps_per_cycle))

    @property
    def dt(self) -> float:
        return self.duration / self.n_steps

    @property
    def t_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.duration, self.n_steps + 1)

    @property
    def up(self) -> float:
        """Ponderomotive energy F0²/(4ω²) in hartree."""
        return self.F0**2 / (4.0 * self.omega_L**2)


class AtomSpec(_Frozen):
    """
    Single-active-electron target.

    Attributes:
        ip: Ionization potential (hartree)
        dipole_model: Bound-continuum dipole model
        name: Optional species name
    """
    ip: float = Field(gt=0.0, description="Ionization potential (hartree)")
    dipole_model: Literal["hydrogenic-1s"] = Field(default="hydrogenic-1s", description="Dipole matrix element model")
    name: str | None = Field(default=None, description="Species name")


class ReturnEvent(_Frozen):
    """
    Classical recollision of an electron born at rest.

    Attributes:
        t_ion: Ionization time (a.u.)
        t_ret: First return time (a.u.)
        energy: Kinetic energy at return (hartree)
    """
    t_ion: float = Field(description="Ionization time (a.u.)")
    t_ret: float = Field(description="Return time (a.u.)")
    energy: float = Field(ge=0.0, description="Return kinetic energy (hartree)")


class DipoleSeries(_Frozen):
    """
    Time-dependent dipole expectation value along the polarization axis.

    Attributes:
        t: Uniform time grid (a.u.)
        d: Dipole moment ⟨d(t)⟩ (a.u.)
        omega_L: Carrier frequency of the driving pulse (a.u.)
    """
    t: RealArray = Field(description="Time grid (a.u.)")
    d: RealArray = Field(description="Dipole expectation (a.u.)")
    omega_L: float = Field(gt=0.0, description="Carrier frequency (a.u.)")

    @model_validator(mode="after")
    def _check_shape(self) -> "DipoleSeries":
        if self.t.shape != self.d.shape or self.t.ndim != 1 or self.t.size < 2:
            raise ValueError("t and d must be equal-length vectors")
        return self

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


class HarmonicShiftSet(_Frozen):
    """
    Coherent displacements χ_q of the field modes q = 1..n_c.

    Attributes:
        chi: χ_q, with chi[0] the fundamental (q = 1)
        n_ph: Number of phase-matched atoms the single-atom shifts were multiplied by
        g_eff: Effective coupling; mode q couples with g_eff·√q
    """
    chi: ComplexArray = Field(description="Displacements χ_q for q = 1..n_c")
    n_ph: int = Field(default=1, ge=0, description="Phase-matched atom count")
    g_eff: float = Field(default=1.0, description="Effective coupling constant")

    @property
    def n_c(self) -> int:
        return int(self.chi.size)

    @property
    def orders(self) -> np.ndarray:
        return np.arange(1, self.n_c + 1)

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.chi) ** 2

    def chi_of(self, q: int) -> complex:
        return complex(self.chi[q - 1])


# ---------------------------------------------------------------------------
# Multimode states
# ---------------------------------------------------------------------------


class MultimodeBranch(_Frozen):
    """
    One term coeff·e^{i·phase}·⊗_q|α_q⟩ of a multimode superposition.

    Attributes:
        coeff: Branch coefficient (absorbs normalization and sign)
        alphas: Coherent amplitude of each mode, in mode order
        phase: Accumulated displacement-composition phase (rad)
    """
    coeff: Complex = Field(default=1.0 + 0.0j, description="Branch coefficient")
    alphas: ComplexArray = Field(description="Per-mode coherent amplitudes")
    phase: float = Field(default=0.0, description="Accumulated phase (rad)")

    @property
    def amplitude(self) -> complex:
        return self.coeff * np.exp(1j * self.phase)

    @property
    def mode_count(self) -> int:
        return int(self.alphas.size)


class EntangledMultimodeState(_Frozen):
    """
    Finite superposition of multimode coherent products.

    Attributes:
        branches: Superposed branches
        orders: Frequency of each mode in units of ω_L
        weight: Probability of the conditioning outcome that produced the state
        provenance: Free-form history (pulse hash, conditioning chain)
    """
    branches: tuple[MultimodeBranch, ...] = Field(description="Superposed branches")
    orders: tuple[float, ...] = Field(description="Mode frequencies in units of ω_L")
    weight: float = Field(default=1.0, ge=0.0, description="Outcome probability")
    provenance: dict[str, str] = Field(default_factory=dict, description="Provenance record")

    @model_validator(mode="after")
    def _check_modes(self) -> "EntangledMultimodeState":
        if not self.branches:
            raise ValueError("at least one branch is required")
        if any(b.mode_count != len(self.orders) for b in self.branches):
            raise ValueError("every branch must carry one amplitude per mode")
        return self

    @property
    def mode_count(self) -> int:
        return len(self.orders)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([b.amplitude for b in self.branches])

    @property
    def alpha_matrix(self) -> np.ndarray:
        """Amplitudes as an array of shape (n_branches, mode_count)."""
        return np.array([b.alphas for b in self.branches])

    def mode_index(self, order: float) -> int:
        for i, o in enumerate(self.orders):
            if abs(o - order) < 1e-9:
                return i
        raise KeyError(f"no mode with order {order}")


class ElectronTag(_Frozen):
    """
    Photoelectron label of a light-matter branch.

    Attributes:
        v: Final canonical momentum (a.u.); equals the drift velocity once A = 0
    """
    v: float = Field(allow_inf_nan=False, description="Canonical momentum (a.u.)")

    @classmethod
    def from_energy(cls, energy_up: float, up: float, sign: int = 1) -> "ElectronTag":
        return cls(v=float(np.sign(sign) * np.sqrt(2.0 * energy_up * up)))

    @property
    def energy(self) -> float:
        return 0.5 * self.v**2

    def energy_up(self, up: float) -> float:
        return self.energy / up


class LightMatterState(_Frozen):
    """
    Entangled electron-field state Σ_v |v⟩|Φ(v)⟩.

    Attributes:
        branches: (electron tag, field state) pairs; the field contributes √weight·Σ amplitudes|branch⟩
    """
    branches: tuple[tuple[ElectronTag, EntangledMultimodeState], ...] = Field(description="Tagged field branches")


# ---------------------------------------------------------------------------
# Measurement
# ---------------------------------------------------------------------------


class HomodyneTrace(_Frozen):
    """
    Phase-tagged quadrature samples.

    Attributes:
        phases: Local-oscillator phases φ_j (rad)
        samples: Quadrature samples x_φ recorded at each phase
        seed: Seed used to generate the samples, if simulated
        provenance: Free-form description of the measured state
    """
    phases: RealArray = Field(description="Local-oscillator phases (rad)")
    samples: tuple[RealArray, ...] = Field(description="Samples per phase")
    seed: int | None = Field(default=None, description="Generator seed")
    provenance: dict[str, str] = Field(default_factory=dict, description="Provenance record")

    @model_validator(mode="after")
    def _check_lengths(self) -> "HomodyneTrace":
        if self.phases.ndim != 1 or len(self.samples) != self.phases.size:
            raise ValueError("one sample vector per phase is required")
        return self

    @property
    def entries(self) -> list[tuple[float, np.ndarray]]:
        return [(float(phi), s) for phi, s in zip(self.phases, self.samples)]

    @property
    def total_samples(self) -> int:
        return int(sum(s.size for s in self.samples))


class ReconstructionReport(BaseModel):
    """
    Diagnostics of a maximum-likelihood reconstruction.

    Attributes:
        iterations: Iterations performed
        converged: Whether the relative likelihood change fell below tol
        log_likelihood: Final log-likelihood
        history: Log-likelihood after every iteration
        merged_bins: Bins merged because their probability underflowed
        mean_photon: ⟨n⟩ of the estimate
    """
    iterations: int = Field(description="Iterations performed")
    converged: bool = Field(description="Stopping rule satisfied")
    log_likelihood: float = Field(description="Final log-likelihood")
    history: list[float] = Field(default_factory=list, description="Log-likelihood per iteration")
    merged_bins: int = Field(default=0, description="Merged underflowing bins")
    mean_photon: float = Field(description="Mean photon number of the estimate")


class ShotRecord(_Frozen):
    """
    One quantum-spectrometer shot.

    Attributes:
        s_ir: Mean-normalized IR photon signal
        s_hh: Mean-normalized harmonic photon signal
        truth: Hidden population label used for validation
    """
    s_ir: float = Field(ge=0.0, description="Normalized IR signal")
    s_hh: float = Field(ge=0.0, description="Normalized harmonic signal")
    truth: Literal["hhg", "background"] = Field(description="Hidden population label")


class ShotTable(_Frozen):
    """
    Columnar collection of shots.

    Attributes:
        s_ir: Normalized IR signals
        s_hh: Normalized harmonic signals
        is_hhg: Hidden labels (True for correlated HHG shots)
        ir_mean_photons: Mean IR photon number used for normalization
        hh_mean_photons: Mean harmonic photon number used for normalization
    """
    s_ir: RealArray = Field(description="Normalized IR signals")
    s_hh: RealArray = Field(description="Normalized harmonic signals")
    is_hhg: Annotated[np.ndarray, BeforeValidator(lambda v: _frozen_array(np.asarray(v, dtype=bool))),
                      PlainSerializer(lambda a: a.tolist(), return_type=list)] = Field(description="Hidden labels")
    ir_mean_photons: float = Field(gt=0.0, description="IR normalization (photons)")
    hh_mean_photons: float = Field(gt=0.0, description="Harmonic normalization (photons)")

    @model_validator(mode="after")
    def _check_lengths(self) -> "ShotTable":
        if not (self.s_ir.shape == self.s_hh.shape == self.is_hhg.shape) or self.s_ir.ndim != 1:
            raise ValueError("shot columns must be equal-length vectors")
        return self

    def __len__(self) -> int:
        return int(self.s_ir.size)

    def subset(self, mask: np.ndarray) -> "ShotTable":
        return ShotTable(s_ir=self.s_ir[mask], s_hh=self.s_hh[mask], is_hhg=self.is_hhg[mask],
                         ir_mean_photons=self.ir_mean_photons, hh_mean_photons=self.hh_mean_photons)

    def records(self) -> list[ShotRecord]:
        return [
            ShotRecord(s_ir=float(a), s_hh=float(b), truth="hhg" if h else "background")
            for a, b, h in zip(self.s_ir, self.s_hh, self.is_hhg)
        ]


class QsModel(BaseModel):
    """
    Generative model of the quantum-spectrometer shot cloud.

    Attributes:
        q_orders: Harmonic orders a correlated HH photon can come from
        q_weights: Relative weights of q_orders
        discrete: Draw integer harmonic photon numbers (multi-peak P_IR) instead of a continuous loss
        hhg_fraction: Probability that a shot carries correlated HHG emission
        hh_mean_photons: Mean harmonic photons per correlated shot
        ir_mean_photons: IR photons per shot before any absorption
        noise_ir: Relative Gaussian noise on the IR signal; the default (0.4 photons at 200 IR photons)
            keeps harmonic orders two photons apart resolved in P_IR, while 0.01 merges them
        noise_hh: Relative Gaussian noise on the harmonic signal
        background_spread: Relative spread of the isotropic background cloud
        shots: Number of shots
        seed: Generator seed
    """
    q_orders: list[int] = Field(default_factory=lambda: [11], description="Harmonic orders of correlated photons")
    q_weights: list[float] | None = Field(default=None, description="Weights of q_orders (uniform if omitted)")
    discrete: bool = Field(default=True, description="Discrete harmonic photon numbers")
    hhg_fraction: float = Field(default=0.7, ge=0.0, le=1.0, description="Correlated-shot probability")
    hh_mean_photons: float = Field(default=2.5, gt=0.0, description="Mean harmonic photons per correlated shot")
    ir_mean_photons: float = Field(default=200.0, gt=0.0, description="IR photons per shot before absorption")
    noise_ir: float = Field(default=0.002, ge=0.0, description="Relative IR noise")
    noise_hh: float = Field(default=0.04, ge=0.0, description="Relative harmonic noise")
    background_spread: float = Field(default=0.6, gt=0.0, description="Relative background spread")
    shots: int = Field(default=100_000, ge=1, description="Number of shots")
    seed: int = Field(default=0, description="Generator seed")

    @model_validator(mode="after")
    def _check_orders(self) -> "QsModel":
        if not self.q_orders or any(q < 1 for q in self.q_orders):
            raise ValueError("q_orders must be positive harmonic orders")
        if self.q_weights is not None and (len(self.q_weights) != len(self.q_orders) or min(self.q_weights) < 0):
            raise ValueError("q_weights must be nonnegative and match q_orders")
        return self

    @property
    def weights(self) -> np.ndarray:
        w = np.ones(len(self.q_orders)) if self.q_weights is None else np.asarray(self.q_weights, dtype=float)
        return w / w.sum()

    @property
    def q_eff(self) -> float:
        return float(np.dot(self.weights, self.q_orders))


class AnticorrelationLine(_Frozen):
    """
    Total-least-squares line through the (S_HH, S_IR) cloud.

    Attributes:
        center_hh, center_ir: Point on the line (cloud centroid)
        dir_hh, dir_ir: Unit direction of the line
    """
    center_hh: float = Field(description="Centroid S_HH")
    center_ir: float = Field(description="Centroid S_IR")
    dir_hh: float = Field(description="Direction component along S_HH")
    dir_ir: float = Field(description="Direction component along S_IR")

    @property
    def slope(self) -> float:
        return self.dir_ir / self.dir_hh

    def distance(self, s_hh: np.ndarray, s_ir: np.ndarray) -> np.ndarray:
        """Perpendicular distance of points from the line."""
        return np.abs((s_hh - self.center_hh) * self.dir_ir - (s_ir - self.center_ir) * self.dir_hh)

    def ir_at(self, s_hh: float) -> float:
        return self.center_ir + self.slope * (s_hh - self.center_hh)


class PirHistogram(_Frozen):
    """
    Conditioned probability of IR photon loss.

    Attributes:
        edges: Bin edges (photons)
        probabilities: Probability per bin
    """
    edges: RealArray = Field(description="Bin edges (photons)")
    probabilities: RealArray = Field(description="Probability per bin")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])
