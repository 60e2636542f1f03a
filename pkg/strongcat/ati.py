"""
Conditioning on above-threshold ionization.

A photoelectron detected with canonical momentum p leaves the field in a superposition over
ionization times t': every t' contributes a multimode coherent product displaced by the
electron's continuum motion after birth, weighted by the ionization amplitude at t'.

Conventions:
- Kinetic velocity v(τ) = p + A(τ); displacement Δr(τ) = ∫_{t'}^{τ} v(τ'')dτ''.
- δ_q(t, t', p) = −g·√q·∫_{t'}^{t} Δr(τ)e^{iqω_Lτ}dτ, the coherent shift of harmonic q.
- The driver amplitude carries the carrier phase of the pulse, θ = πN − cep − π/2.
- δ is generated in the frame displaced by the driver, so a branch reads
  D(α_L)·D(δ)·D(χ(t'))|0⟩: the driver enters last in the composition phase.
- The drift part of δ_1 is radial to α_L. A momentum p adds photons when
  p·Im(α_L) > 0, i.e. p·(−1)^{N+1}·cos(cep) > 0; shifting the CEP by π reverses it.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Literal, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .conditioning import assemble_state, entropy_bits, gram_apply, state_overlap
from .config import field_from_intensity
from .errors import ConvergenceFailureError, DegenerateSuperpositionError, ValidationError
from .phase_space import coherent_fock_matrix, required_truncation
from .schemas import (
    AtomSpec,
    DensityMatrix,
    ElectronTag,
    EntangledMultimodeState,
    FockVector,
    LaserPulse,
    LightMatterState,
)
from .sfa import dipole_element, electric_field, vector_potential

logger = logging.getLogger(__name__)

MIN_TSTEPS_PER_CYCLE = 64
TV_TOLERANCE = 1e-3


def driver_amplitude(pulse: LaserPulse, magnitude: float) -> complex:
    """Coherent amplitude of the driving mode whose classical field reproduces the pulse carrier."""
    theta = np.pi * pulse.n_cycles - pulse.cep - 0.5 * np.pi
    return complex(magnitude * np.exp(1j * theta))


def tunneling_amplitude(field: np.ndarray, ip: float) -> np.ndarray:
    """Quasi-static tunneling amplitude exp(−(2Ip)^{3/2}/(3|E|)); zero where the field vanishes."""
    mag = np.abs(np.asarray(field, dtype=float))
    out = np.zeros_like(mag)
    on = mag > 0
    out[on] = np.exp(-((2.0 * ip) ** 1.5) / (3.0 * mag[on]))
    return out


def ati_displacement(
    pulse: LaserPulse,
    tag: ElectronTag,
    t_ion: float,
    t: float,
    q: int,
    g_eff: float = 1.0,
) -> complex:
    """
    Coherent shift δ_q(t, t_ion, p) of mode q caused by an electron born at t_ion.

    Over the whole pulse (t_ion = 0, t = T) of a symmetric envelope at cep = 0 the
    vector-potential part is real, so Im δ_q is odd in p. Births inside the pulse break this.

    Args:
        pulse: Driving pulse.
        tag: Photoelectron momentum.
        t_ion: Ionization time (a.u.).
        t: Observation time (a.u.), t >= t_ion.
        q: Mode order (1 is the fundamental).
        g_eff: Coupling constant g(ω_L).

    Raises:
        ValidationError: If t < t_ion or q < 1.
    """
    if t < t_ion:
        raise ValidationError("t must not precede t_ion")
    if q < 1:
        raise ValidationError("q must be a positive mode order")
    if t == t_ion:
        return 0j
    n = max(257, 4 * int(np.ceil((t - t_ion) / pulse.dt)) + 1)
    tau = np.linspace(t_ion, t, n)
    dr = tag.v * (tau - t_ion) + cumulative_trapezoid(vector_potential(pulse, tau), tau, initial=0.0)
    return complex(-g_eff * np.sqrt(q) * trapezoid(dr * np.exp(1j * q * pulse.omega_L * tau), tau))


def fundamental_distribution(state: EntangledMultimodeState, n_trunc: int | None = None) -> np.ndarray:
    """Photon-number distribution of the fundamental mode (mode 0) of a normalized state."""
    rows = state.alpha_matrix
    if n_trunc is None:
        n_trunc = required_truncation(float(np.max(np.abs(rows[:, 0]))))
    u = state.amplitudes[:, None] * coherent_fock_matrix(rows[:, 0], n_trunc)
    if state.mode_count == 1:
        pops = np.abs(u.sum(axis=0)) ** 2
    else:
        rest = list(range(1, state.mode_count))
        pops = np.real(np.sum(np.conj(u) * gram_apply(rows, rows, u, modes=rest), axis=0))
    return np.clip(pops, 0.0, None)


class AtiSynthesizer:
    """
    Builds field states conditioned on a detected photoelectron momentum.

    The ionization-time integral is discretized on a midpoint grid over the pulse window.
    Each grid point becomes one branch with weight d(p + A(t'))·E(t')·a_tun(E(t'))·Δt',
    where a_tun is the quasi-static tunneling amplitude, and with field amplitudes
    α_L·e_1 + χ(t') + δ(T, t', p). The composition phase follows D(α_L)D(δ)D(χ): the
    driver displacement is applied after the electron's. For weak coupling the branch sum
    nearly cancels, and the fundamental P(n) is two-lobed around |α_L + δ̄|².

    Attributes:
        atom: Target atom
        alpha_L: Magnitude of the driving coherent amplitude
        n_modes: Field modes per branch (fundamental first)
        g_eff: Coupling constant of the continuum displacements
        tsteps_per_cycle: Initial branches per optical cycle
        max_tsteps_per_cycle: Cap of the convergence doubling
        threads: Worker threads for momentum-parallel synthesis
    """

    def __init__(
        self,
        atom: AtomSpec,
        alpha_L: float,
        n_modes: int = 1,
        g_eff: float = 1.5e-4,
        tsteps_per_cycle: int = MIN_TSTEPS_PER_CYCLE,
        max_tsteps_per_cycle: int = 1024,
        threads: int = 1,
    ):
        if tsteps_per_cycle < MIN_TSTEPS_PER_CYCLE:
            raise ValidationError(f"tsteps_per_cycle must be at least {MIN_TSTEPS_PER_CYCLE}")
        if max_tsteps_per_cycle < tsteps_per_cycle:
            raise ValidationError("max_tsteps_per_cycle must not be below tsteps_per_cycle")
        if n_modes < 1 or threads < 1:
            raise ValidationError("n_modes and threads must be positive")
        self.atom = atom
        self.alpha_L = float(abs(alpha_L))
        self.n_modes = n_modes
        self.g_eff = g_eff
        self.tsteps_per_cycle = tsteps_per_cycle
        self.max_tsteps_per_cycle = max_tsteps_per_cycle
        self.threads = threads
        logger.info(
            f"AtiSynthesizer initialized (|alpha_L|={self.alpha_L}, modes={n_modes}, g_eff={g_eff:g}, "
            f"tsteps={tsteps_per_cycle}..{max_tsteps_per_cycle}/cycle, threads={threads})"
        )

    def _displacements(self, pulse: LaserPulse, p: float, tp: np.ndarray, fine_steps: int) -> np.ndarray:
        fine = pulse.model_copy(update={"steps_per_cycle": fine_steps})
        tf = fine.t_grid
        ia = cumulative_trapezoid(vector_potential(pulse, tf), tf, initial=0.0)
        ia_tp = np.interp(tp, tf, ia)
        big_t = pulse.duration
        out = np.empty((tp.size, self.n_modes), dtype=complex)
        for m in range(self.n_modes):
            w = (m + 1) * pulse.omega_L
            f = (p * tf + ia) * np.exp(1j * w * tf)
            cf = cumulative_trapezoid(f, tf, initial=0.0)
            tail_f = cf[-1] - (np.interp(tp, tf, cf.real) + 1j * np.interp(tp, tf, cf.imag))
            tail_g = (np.exp(1j * w * big_t) - np.exp(1j * w * tp)) / (1j * w)
            out[:, m] = -self.g_eff * np.sqrt(m + 1) * (tail_f - (p * tp + ia_tp) * tail_g)
        return out

    def synthesize(
        self,
        pulse: LaserPulse,
        tag: ElectronTag,
        tsteps_per_cycle: int,
        shift_history: np.ndarray | None = None,
    ) -> EntangledMultimodeState:
        """
        Branch superposition for a fixed ionization-time grid.

        Args:
            pulse: Driving pulse.
            tag: Detected photoelectron momentum.
            tsteps_per_cycle: Ionization times per optical cycle.
            shift_history: Optional χ_q(t) on pulse.t_grid, shape (len(t_grid), >= n_modes).

        Returns:
            Normalized state; its weight is the (unnormalized) ionization probability.
        """
        if tsteps_per_cycle < MIN_TSTEPS_PER_CYCLE:
            raise ValidationError(f"tsteps_per_cycle must be at least {MIN_TSTEPS_PER_CYCLE}")
        n_br = max(1, int(round(tsteps_per_cycle * pulse.n_cycles)))
        dtp = pulse.duration / n_br
        tp = (np.arange(n_br) + 0.5) * dtp

        e_tp = electric_field(pulse, tp)
        v_tp = tag.v + vector_potential(pulse, tp)
        weights = dipole_element(v_tp, self.atom.ip) * e_tp * tunneling_amplitude(e_tp, self.atom.ip) * dtp
        scale = float(np.sqrt(np.sum(np.abs(weights) ** 2)))
        if scale == 0.0:
            raise DegenerateSuperpositionError("no ionization amplitude: the field vanishes on the whole grid")

        drive = np.zeros(self.n_modes, dtype=complex)
        drive[0] = driver_amplitude(pulse, self.alpha_L)
        chi = np.zeros((n_br, self.n_modes), dtype=complex)
        if shift_history is not None:
            hist = np.asarray(shift_history, dtype=complex)
            t_grid = pulse.t_grid
            if hist.shape[0] != t_grid.size or hist.shape[1] < self.n_modes:
                raise ValidationError("shift_history must be sampled on pulse.t_grid for every mode")
            for m in range(self.n_modes):
                chi[:, m] = np.interp(tp, t_grid, hist[:, m].real) + 1j * np.interp(tp, t_grid, hist[:, m].imag)

        delta = self._displacements(pulse, tag.v, tp, max(pulse.steps_per_cycle, 2 * tsteps_per_cycle))
        # D(α)D(δ)D(χ)|0⟩ = e^{iφ}|α + δ + χ⟩
        phase = np.sum(np.imag(delta * np.conj(chi)) + np.imag(drive * np.conj(chi + delta)), axis=1)
        amplitudes = weights / scale * np.exp(1j * phase)
        state = assemble_state(
            amplitudes,
            drive + chi + delta,
            tuple(float(m + 1) for m in range(self.n_modes)),
            scale**2,
            {"conditioning": "ati", "momentum": f"{tag.v:.12g}", "tsteps_per_cycle": str(tsteps_per_cycle)},
        )
        logger.debug(f"ATI synthesis: p={tag.v:+.4f}, {n_br} ionization times, {len(state.branches)} distinct branches")
        return state

    def conditioned_state(
        self,
        pulse: LaserPulse,
        tag: ElectronTag,
        shift_history: np.ndarray | None = None,
    ) -> EntangledMultimodeState:
        """
        Converged branch superposition for a detected momentum.

        The ionization-time grid is doubled until the fundamental-mode photon distribution
        changes by less than 1e-3 in total variation.

        Raises:
            ConvergenceFailureError: If the cap is reached first.
        """
        steps = self.tsteps_per_cycle
        state = self.synthesize(pulse, tag, steps, shift_history)
        n_trunc = required_truncation(float(np.max(np.abs(state.alpha_matrix[:, 0]))))
        pops = fundamental_distribution(state, n_trunc)
        while steps * 2 <= self.max_tsteps_per_cycle:
            steps *= 2
            refined = self.synthesize(pulse, tag, steps, shift_history)
            n_trunc = max(n_trunc, required_truncation(float(np.max(np.abs(refined.alpha_matrix[:, 0])))))
            new_pops = fundamental_distribution(refined, n_trunc)
            old = np.pad(pops, (0, n_trunc - pops.size))
            tv = 0.5 * float(np.sum(np.abs(new_pops - old)))
            logger.debug(f"ATI doubling to {steps}/cycle: total variation {tv:.3e}")
            state, pops = refined, new_pops
            if tv < TV_TOLERANCE:
                logger.info(f"ATI state converged at {steps} ionization times per cycle (p={tag.v:+.4f})")
                return state
        logger.error(f"ATI synthesis did not converge up to {self.max_tsteps_per_cycle} steps per cycle")
        raise ConvergenceFailureError(
            f"photon distribution still changing at {self.max_tsteps_per_cycle} ionization times per cycle"
        )

    def _map(self, fn, items: Sequence) -> list:
        if self.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(fn, items))
        return [fn(item) for item in items]

    def light_matter_state(self, pulse: LaserPulse, energy_up: float) -> LightMatterState:
        """|v⟩|Φ(v)⟩ + |−v⟩|Φ(−v)⟩ for a photoelectron energy in units of U_p."""
        if energy_up <= 0:
            raise ValidationError("energy_up must be positive")
        tags = [ElectronTag.from_energy(energy_up, pulse.up, sign) for sign in (1, -1)]
        fields = self._map(lambda tg: self.conditioned_state(pulse, tg), tags)
        return LightMatterState(branches=tuple(zip(tags, fields)))

    def mixed_state(
        self,
        pulse: LaserPulse,
        tags: Sequence[ElectronTag],
        weighting: Literal["uniform", "sfa"] = "uniform",
        n_trunc: int | None = None,
    ) -> DensityMatrix:
        """Fundamental-mode mixture over a momentum grid (see ati_mixed_state)."""
        states = self._map(lambda tg: self.conditioned_state(pulse, tg), list(tags))
        return ati_mixed_state(states, weighting=weighting, n_trunc=n_trunc)


def ati_conditioned_state(
    pulse: LaserPulse,
    atom: AtomSpec,
    tag: ElectronTag,
    n_tsteps: int = MIN_TSTEPS_PER_CYCLE,
    alpha_L: float = 7.0,
    g_eff: float = 1.5e-4,
    n_modes: int = 1,
    max_tsteps: int = 1024,
    shift_history: np.ndarray | None = None,
) -> EntangledMultimodeState:
    """Convenience wrapper around AtiSynthesizer.conditioned_state."""
    synth = AtiSynthesizer(atom, alpha_L, n_modes=n_modes, g_eff=g_eff,
                           tsteps_per_cycle=n_tsteps, max_tsteps_per_cycle=max_tsteps)
    return synth.conditioned_state(pulse, tag, shift_history)


def ati_field_state(state: EntangledMultimodeState, n_trunc: int | None = None) -> FockVector:
    """
    Fundamental-mode state ⟨0_HH|Φ⟩ with every other mode projected onto vacuum, normalized.

    Raises:
        DegenerateSuperpositionError: If the projection has no weight.
    """
    rows = state.alpha_matrix
    c = state.amplitudes * np.exp(-0.5 * np.sum(np.abs(rows[:, 1:]) ** 2, axis=1))
    if n_trunc is None:
        n_trunc = required_truncation(float(np.max(np.abs(rows[:, 0]))))
    coeffs = c @ coherent_fock_matrix(rows[:, 0], n_trunc)
    norm2 = float(np.sum(np.abs(coeffs) ** 2))
    if norm2 < 1e-12 * float(np.sum(np.abs(c) ** 2)):
        raise DegenerateSuperpositionError("fundamental-mode projection has vanishing norm")
    return FockVector(coeffs=coeffs / np.sqrt(norm2))


def ati_mixed_state(
    states: Sequence[EntangledMultimodeState],
    weights: Sequence[float] | None = None,
    weighting: Literal["uniform", "sfa"] = "uniform",
    n_trunc: int | None = None,
) -> DensityMatrix:
    """
    ρ = Σ_v w_v|Φ^IR(v)⟩⟨Φ^IR(v)| on the fundamental mode, trace normalized.

    Args:
        states: Conditioned states over a momentum grid.
        weights: Explicit weights; overrides `weighting`.
        weighting: uniform, or sfa (weights ∝ each state's ionization probability).
        n_trunc: Fock truncation (default from the largest fundamental amplitude).
    """
    if not states:
        raise ValidationError("at least one conditioned state is required")
    if weights is None:
        weights = [1.0] * len(states) if weighting == "uniform" else [s.weight for s in states]
    w = np.asarray(weights, dtype=float)
    if w.size != len(states) or np.any(w < 0) or w.sum() <= 0:
        raise ValidationError("weights must be nonnegative, not all zero, one per state")
    if n_trunc is None:
        n_trunc = max(required_truncation(float(np.max(np.abs(s.alpha_matrix[:, 0])))) for s in states)
    rho = np.zeros((n_trunc, n_trunc), dtype=complex)
    for wi, s in zip(w / w.sum(), states):
        psi = ati_field_state(s, n_trunc).coeffs
        rho += wi * np.outer(psi, np.conj(psi))
    return DensityMatrix(elements=rho / np.real(np.trace(rho)))


def momentum_grid(pulse: LaserPulse, momentum_up: float, points: int) -> list[ElectronTag]:
    """Symmetric grid of `points` momenta spanning ±momentum_up·√U_p."""
    p_max = momentum_up * np.sqrt(pulse.up)
    values = [p_max] if points == 1 else np.linspace(-p_max, p_max, points)
    return [ElectronTag(v=float(v)) for v in values]


def entropy_of_entanglement(state: LightMatterState) -> float:
    """
    S = −Tr ρ log₂ ρ of the electron (equivalently field) reduced state.

    Electron tags with distinct momenta are orthogonal; branches sharing a momentum are
    added coherently. Each field contributes √weight·Σ amplitudes|branch⟩.
    """
    if not state.branches:
        raise ValidationError("light-matter state has no branches")
    groups: dict[float, list[EntangledMultimodeState]] = {}
    for tag, field in state.branches:
        groups.setdefault(round(tag.v, 12), []).append(field)
    fields = list(groups.values())
    n = len(fields)
    gram = np.zeros((n, n), dtype=complex)
    for k in range(n):
        for l in range(k, n):
            val = sum(
                np.sqrt(f1.weight * f2.weight) * state_overlap(f1, f2)
                for f1 in fields[k]
                for f2 in fields[l]
            )
            gram[k, l] = val
            gram[l, k] = np.conj(val)
    trace = float(np.real(np.trace(gram)))
    if trace <= 0:
        raise DegenerateSuperpositionError("light-matter state has vanishing norm")
    lams = np.clip(np.linalg.eigvalsh(gram / trace), 0.0, None)
    return entropy_bits(lams / lams.sum())


def ati_light_matter_state(
    pulse: LaserPulse,
    atom: AtomSpec,
    energy_up: float,
    alpha_L: float = 7.0,
    g_eff: float = 1.5e-4,
    n_tsteps: int = MIN_TSTEPS_PER_CYCLE,
    max_tsteps: int = 1024,
) -> LightMatterState:
    synth = AtiSynthesizer(atom, alpha_L, g_eff=g_eff, tsteps_per_cycle=n_tsteps, max_tsteps_per_cycle=max_tsteps)
    return synth.light_matter_state(pulse, energy_up)


def entropy_energy_sweep(
    atom: AtomSpec,
    omegas: Sequence[float],
    energies_up: Sequence[float],
    intensity_wcm2: float = 1e14,
    n_cycles: int = 5,
    alpha_L: float = 7.0,
    g_eff: float = 1e-7,
    n_tsteps: int = MIN_TSTEPS_PER_CYCLE,
    max_tsteps: int = 1024,
    threads: int = 1,
) -> list[tuple[float, float, float]]:
    """
    Entropy of entanglement against photoelectron energy for several carrier frequencies.

    Every frequency uses a sin² pulse of n_cycles cycles at the same peak intensity.

    Returns:
        (ω_L, 𝓔/U_p, S) rows.
    """
    synth = AtiSynthesizer(atom, alpha_L, g_eff=g_eff, tsteps_per_cycle=n_tsteps,
                           max_tsteps_per_cycle=max_tsteps, threads=threads)
    rows = []
    for omega in omegas:
        pulse = LaserPulse(F0=field_from_intensity(intensity_wcm2), omega_L=omega, n_cycles=n_cycles)
        for energy in energies_up:
            entropy = entropy_of_entanglement(synth.light_matter_state(pulse, energy))
            rows.append((float(omega), float(energy), entropy))
            logger.debug(f"Entropy sweep: omega={omega}, E/Up={energy}, S={entropy:.4f}")
    logger.info(f"Entropy-of-entanglement sweep finished: {len(rows)} points")
    return rows
