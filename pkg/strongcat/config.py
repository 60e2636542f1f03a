"""
Configuration for strongcat runs.

Physical inputs are given in laboratory units (W/cm², nm, fs, eV) and converted to
atomic units exactly once, by PulseSettings.to_pulse() and AtomSettings.to_atom().
"""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Literal

import numpy as np
import yaml
from pydantic import BaseModel, Field, model_validator
from pydantic import ValidationError as PydanticValidationError

from .errors import ConfigurationError
from .schemas import AtomSpec, Complex, GridSpec, LaserPulse, QsModel

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "STRONGCAT_THREADS"

# Atomic-unit conversions
HARTREE_EV = 27.211386245988
ATOMIC_INTENSITY_WCM2 = 3.50944758e16
ATOMIC_TIME_FS = 0.02418884326585747
BOHR_NM = 0.0529177210903
SPEED_OF_LIGHT_AU = 137.035999084


def field_from_intensity(intensity_wcm2: float) -> float:
    """Peak field (a.u.) of a linearly polarized pulse of the given peak intensity."""
    return float(np.sqrt(intensity_wcm2 / ATOMIC_INTENSITY_WCM2))


def omega_from_wavelength(wavelength_nm: float) -> float:
    """Carrier frequency (a.u.) for a vacuum wavelength in nm."""
    return float(2.0 * np.pi * SPEED_OF_LIGHT_AU * BOHR_NM / wavelength_nm)


def ev_to_hartree(energy_ev: float) -> float:
    return energy_ev / HARTREE_EV


def hartree_to_ev(energy_au: float) -> float:
    return energy_au * HARTREE_EV


def fs_to_au(time_fs: float) -> float:
    return time_fs / ATOMIC_TIME_FS


class PulseSettings(BaseModel):
    """
    Driving pulse in laboratory units.

    The default 30 fs window is 11 cycles of 800 nm light. Its sin² envelope breaks the
    half-cycle symmetry, so even harmonics reach a few tenths of the odd power around H10;
    windows of 30 cycles or more keep them below 1e-4 of it. With odd cycle counts and
    cep = 0 a positive photoelectron momentum adds photons to the driver.

    Attributes:
        intensity_wcm2: Peak intensity (W/cm²)
        wavelength_nm: Carrier wavelength (nm)
        duration_fs: Pulse window (fs); ignored when n_cycles is given
        n_cycles: Pulse window in optical cycles
        cep: Carrier-envelope phase (rad)
        envelope: Envelope shape
        steps_per_cycle: Time samples per optical cycle
    """
    intensity_wcm2: float = Field(default=8e13, ge=0.0, description="Peak intensity (W/cm²)")
    wavelength_nm: float = Field(default=800.0, gt=0.0, description="Carrier wavelength (nm)")
    duration_fs: float | None = Field(default=30.0, gt=0.0, description="Pulse window (fs)")
    n_cycles: float | None = Field(default=None, gt=0.0, description="Pulse window (optical cycles)")
    cep: float = Field(default=0.0, description="Carrier-envelope phase (rad)")
    envelope: Literal["sin2", "gaussian", "flat"] = Field(default="sin2", description="Envelope shape")
    steps_per_cycle: int = Field(default=128, ge=8, description="Time samples per optical cycle")

    @model_validator(mode="after")
    def _check_window(self) -> "PulseSettings":
        if self.duration_fs is None and self.n_cycles is None:
            raise ValueError("either duration_fs or n_cycles must be given")
        return self

    def to_pulse(self) -> LaserPulse:
        omega = omega_from_wavelength(self.wavelength_nm)
        if self.n_cycles is not None:
            cycles = self.n_cycles
        else:
            cycles = max(1.0, round(fs_to_au(self.duration_fs) * omega / (2.0 * np.pi)))
        return LaserPulse(
            F0=field_from_intensity(self.intensity_wcm2),
            omega_L=omega,
            n_cycles=cycles,
            cep=self.cep,
            envelope=self.envelope,
            steps_per_cycle=self.steps_per_cycle,
        )


class AtomSettings(BaseModel):
    """
    Target atom.

    Attributes:
        name: Species label
        ip_ev: Ionization potential (eV)
        dipole_model: Bound-continuum dipole model
    """
    name: str = Field(default="Xe", description="Species label")
    ip_ev: float = Field(default=12.13, gt=0.0, description="Ionization potential (eV)")
    dipole_model: Literal["hydrogenic-1s"] = Field(default="hydrogenic-1s", description="Dipole model")

    def to_atom(self) -> AtomSpec:
        return AtomSpec(ip=ev_to_hartree(self.ip_ev), dipole_model=self.dipole_model, name=self.name)


class CouplingSettings(BaseModel):
    """
    Light-matter coupling used to turn a dipole into mode displacements.

    Attributes:
        n_c: Number of field modes (fundamental + harmonics)
        g_eff: Effective coupling; mode q couples with g_eff·√q
        n_ph: Number of phase-matched atoms
        chi1_target: If set, g_eff is calibrated so that |χ_1| equals this value
    """
    n_c: int = Field(default=30, ge=2, description="Number of field modes")
    g_eff: float = Field(default=1e-6, description="Effective coupling constant")
    n_ph: int = Field(default=1, ge=0, description="Phase-matched atom count")
    chi1_target: float | None = Field(default=None, gt=0.0, description="Calibrate g_eff to this |χ_1|")


class SfaSettings(BaseModel):
    """
    Numerical settings of the SFA dipole integral.

    Attributes:
        epsilon_cycles: Regularization of the spreading prefactor (optical cycles)
        max_excursion_cycles: Longest excursion time kept in the integral (optical cycles)
    """
    epsilon_cycles: float = Field(default=1e-4, gt=0.0, description="Spreading regularization (cycles)")
    max_excursion_cycles: float = Field(default=1.0, gt=0.0, description="Longest excursion (cycles)")


class StateSettings(BaseModel):
    """
    Single-mode state descriptor.

    Attributes:
        kind: coherent | fock | squeezed | cat | file
        alpha: Coherent amplitude (displacement for squeezed, base for cat)
        n: Fock number
        k: Squeezing parameter
        chi: Cat shift (|α+χ⟩ − ⟨α|α+χ⟩|α⟩)
        path: State JSON file (kind=file)
        n_trunc: Fock truncation override
    """
    kind: Literal["coherent", "fock", "squeezed", "cat", "file"] = Field(default="coherent", description="State kind")
    alpha: Complex = Field(default=2.0 + 0.0j, description="Coherent amplitude")
    n: int = Field(default=0, ge=0, description="Fock number")
    k: float = Field(default=0.0, description="Squeezing parameter")
    chi: Complex = Field(default=1.5 + 0.0j, description="Cat shift")
    path: str | None = Field(default=None, description="State file for kind=file")
    n_trunc: int | None = Field(default=None, ge=2, description="Fock truncation override")


class ConditioningSettings(BaseModel):
    """
    Conditioning chain and sweep settings.

    Attributes:
        mode: ir-cat | xuv-cat | two-color | ati
        alpha_L: Driving-field coherent amplitude
        chi1: Fundamental shift override (replaces the SFA-derived χ_1)
        harmonic_chi: Uniform plateau shift for harmonics 3..cutoff_order (replaces SFA-derived χ_q)
        cutoff_order: Last harmonic carrying harmonic_chi
        q: Harmonic order for xuv-cat
        alpha2: Second driver amplitude (two-color)
        chi2: Second driver shift (two-color)
        sweep_min, sweep_max, sweep_points: |χ_1| range of the linear-entropy sweep
        sweep_kind: linear (S_lin vs |χ_1|) or energy (entanglement entropy vs photoelectron energy)
        ati_alpha_L: Driving-field amplitude magnitude of ATI conditioning
        momentum_up: ATI momentum magnitude in units of √U_p
        momentum_sign: ATI momentum sign
        tsteps_per_cycle: Initial ionization-time branches per optical cycle
        max_tsteps_per_cycle: Cap of the doubling test
        ati_g_eff: Coupling used for the continuum-electron displacements
        ati_modes: Number of field modes (fundamental first) in ATI branches
        momentum_points: Momenta between −p and +p in the mixed state
        weighting: Momentum-grid weighting of the mixed state
        energies_up: Photoelectron energies (units of U_p) of the entropy sweep
        omegas: Carrier frequencies (a.u.) of the entropy sweep
        sweep_intensity_wcm2, sweep_cycles, sweep_g_eff: Pulse and coupling of the entropy sweep
    """
    mode: Literal["ir-cat", "xuv-cat", "two-color", "ati"] = Field(default="ir-cat", description="Conditioning mode")
    alpha_L: Complex = Field(default=2.0 + 0.0j, description="Driving-field amplitude")
    chi1: Complex | None = Field(default=None, description="Fundamental shift override")
    harmonic_chi: float | None = Field(default=None, description="Uniform plateau harmonic shift")
    cutoff_order: int = Field(default=11, ge=2, description="Last plateau harmonic")
    q: int = Field(default=11, ge=2, description="Harmonic order for xuv-cat")
    alpha2: Complex = Field(default=2.0 + 0.0j, description="Second driver amplitude")
    chi2: Complex = Field(default=-0.2 + 0.0j, description="Second driver shift")
    sweep_min: float = Field(default=0.0, ge=0.0, description="Sweep start |χ_1|")
    sweep_max: float = Field(default=4.0, gt=0.0, description="Sweep end |χ_1|")
    sweep_points: int = Field(default=81, ge=2, description="Sweep samples")
    sweep_kind: Literal["linear", "energy"] = Field(default="linear", description="Sweep kind")
    ati_alpha_L: float = Field(default=7.0, gt=0.0, description="ATI driving amplitude")
    momentum_up: float = Field(default=0.32, ge=0.0, description="|p| in units of √U_p")
    momentum_sign: Literal[1, -1] = Field(default=1, description="Sign of p")
    tsteps_per_cycle: int = Field(default=64, ge=64, description="Initial branches per cycle")
    max_tsteps_per_cycle: int = Field(default=1024, ge=64, description="Branch doubling cap per cycle")
    ati_g_eff: float = Field(default=1.5e-4, ge=0.0, description="Continuum displacement coupling")
    ati_modes: int = Field(default=1, ge=1, description="Field modes carried by ATI branches")
    momentum_points: int = Field(default=9, ge=1, description="Momenta of the mixed-state grid")
    weighting: Literal["uniform", "sfa"] = Field(default="uniform", description="Momentum-grid weighting")
    energies_up: list[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 6.0, 8.0], description="Sweep energies (U_p)")
    omegas: list[float] = Field(default_factory=lambda: [0.009, 0.010, 0.011], description="Sweep frequencies (a.u.)")
    sweep_intensity_wcm2: float = Field(default=1e14, gt=0.0, description="Peak intensity of the entropy sweep")
    sweep_cycles: int = Field(default=5, ge=1, description="Pulse cycles of the entropy sweep")
    sweep_g_eff: float = Field(default=1e-7, ge=0.0, description="Continuum coupling of the entropy sweep")


class TomographySettings(BaseModel):
    """
    Homodyne sampling and reconstruction settings.

    Attributes:
        n_phases: Local-oscillator phases, uniform over [0, π)
        shots_per_phase: Samples per phase
        bin_width: Quadrature bin width of the likelihood projectors
        eta: Detector efficiency
        cutoff: Ramp-filter cutoff of the back-projection
        n_trunc: Reconstruction truncation (defaults to the state's)
        max_iter: MaxLik iteration limit
        tol: Relative log-likelihood change stopping rule
        input: Existing trace CSV to reconstruct instead of sampling
    """
    n_phases: int = Field(default=12, ge=1, description="Number of phases")
    shots_per_phase: int = Field(default=10_000, ge=1, description="Samples per phase")
    bin_width: float = Field(default=0.05, gt=0.0, description="Likelihood bin width")
    eta: float = Field(default=1.0, gt=0.0, le=1.0, description="Detector efficiency")
    cutoff: float = Field(default=4.0, gt=0.0, description="Back-projection frequency cutoff")
    n_trunc: int | None = Field(default=None, ge=2, description="Reconstruction truncation")
    max_iter: int = Field(default=2000, ge=1, description="MaxLik iteration limit")
    tol: float = Field(default=1e-8, gt=0.0, description="Relative likelihood change stopping rule")
    input: str | None = Field(default=None, description="Trace CSV to reconstruct")


class RunConfig(BaseModel):
    """
    Root configuration of a strongcat run.

    Attributes:
        pulse: Driving pulse
        atom: Target atom
        coupling: Mode coupling
        sfa: SFA numerics
        state: Single-mode state for wigner/tomo
        grid: Wigner grid
        conditioning: Conditioning chain
        tomography: Tomography settings
        qs: Quantum-spectrometer model
        output_dir: Directory receiving all artifacts
        seed: Master seed
        threads: Worker threads (falls back to STRONGCAT_THREADS, then 1)
    """
    pulse: PulseSettings = Field(default_factory=PulseSettings, description="Driving pulse")
    atom: AtomSettings = Field(default_factory=AtomSettings, description="Target atom")
    coupling: CouplingSettings = Field(default_factory=CouplingSettings, description="Mode coupling")
    sfa: SfaSettings = Field(default_factory=SfaSettings, description="SFA numerics")
    state: StateSettings = Field(default_factory=StateSettings, description="Single-mode state")
    grid: GridSpec = Field(default_factory=GridSpec, description="Wigner grid")
    conditioning: ConditioningSettings = Field(default_factory=ConditioningSettings, description="Conditioning")
    tomography: TomographySettings = Field(default_factory=TomographySettings, description="Tomography")
    qs: QsModel = Field(default_factory=QsModel, description="Quantum-spectrometer model")
    output_dir: str = Field(default="strongcat-out", description="Artifact directory")
    seed: int = Field(default=0, ge=0, description="Master seed")
    threads: int | None = Field(default=None, ge=1, description="Worker threads")

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def resolve_threads(cfg: RunConfig | None = None) -> int:
    """
    Resolve the worker count.

    Priority order:
    1. cfg.threads (set from --threads or the config file)
    2. STRONGCAT_THREADS environment variable
    3. 1

    Raises:
        ConfigurationError: If the environment variable is not a positive integer.
    """
    if cfg is not None and cfg.threads is not None:
        return cfg.threads
    raw = os.getenv(THREADS_ENV_VAR)
    if raw is None:
        return 1
    try:
        threads = int(raw)
    except ValueError as e:
        raise ConfigurationError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}", field=THREADS_ENV_VAR) from e
    if threads < 1:
        raise ConfigurationError(f"{THREADS_ENV_VAR} must be positive, got {threads}", field=THREADS_ENV_VAR)
    return threads


def _line_of(text: str, loc: tuple[Any, ...]) -> int | None:
    """1-based source line of a dotted location inside a YAML document, if it can be found."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    line = None
    for key in loc:
        if node is None:
            break
        if isinstance(node, yaml.MappingNode):
            match = next(((k, v) for k, v in node.value if k.value == str(key)), None)
            if match is None:
                break
            line = match[0].start_mark.line + 1
            node = match[1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def validate_config(data: dict[str, Any], source_text: str | None = None, source: str = "<config>") -> RunConfig:
    """
    Validate a raw mapping into a RunConfig.

    Raises:
        ConfigurationError: Naming the first offending field (and line, when known).
    """
    try:
        return RunConfig.model_validate(data)
    except PydanticValidationError as e:
        err = e.errors()[0]
        loc = tuple(err["loc"])
        field = ".".join(str(p) for p in loc)
        line = _line_of(source_text, loc) if source_text else None
        where = f"{source}:{line}" if line else source
        logger.error(f"Invalid configuration at {where} ({field}): {err['msg']}")
        raise ConfigurationError(f"{where}: {field}: {err['msg']}", field=field, line=line) from e


def load_config(path: str | Path) -> RunConfig:
    """
    Load a YAML or JSON configuration file.

    Args:
        path: Configuration file path.

    Returns:
        Validated RunConfig.

    Raises:
        ConfigurationError: If the file is unreadable, malformed or invalid.

    Examples:
        >>> cfg = load_config("xe_800nm.yaml")
        >>> cfg.pulse.to_pulse().F0
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file {path}: {e}") from e
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigurationError(f"{path}:{line}: malformed YAML: {e}", line=line) from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    cfg = validate_config(data, source_text=text, source=str(path))
    logger.info(f"Loaded configuration from {path} (hash={cfg.config_hash()[:12]})")
    return cfg
