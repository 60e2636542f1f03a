"""
Strong-field layer for strongcat.

This module provides:
- Ponderomotive energy, Keldysh parameter and cutoff-law diagnostics
- Analytic pulse fields A(t), E(t) = −dA/dt for sin², gaussian and flat-top envelopes
- Classical three-step return trajectories
- The SFA time-dependent dipole (Lewenstein form, hydrogenic 1s matrix element)
- Per-mode coherent displacements χ_q from the dipole's Fourier components

All quantities are in atomic units except where a signature says otherwise.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.fft import rfft, rfftfreq
from scipy.integrate import cumulative_trapezoid, trapezoid

from .config import SfaSettings
from .errors import (
    GridTooCoarseError,
    NoReturnsError,
    NyquistViolationError,
    ValidationError,
    ZeroFieldError,
)
from .schemas import AtomSpec, DipoleSeries, HarmonicShiftSet, LaserPulse, ReturnEvent

logger = logging.getLogger(__name__)

UP_COEFF_EV = 9.33e-14
CLASSICAL_CUTOFF = 3.17
IP_CUTOFF = 1.32
GAUSSIAN_FWHM_FRACTION = 1.0 / 6.0
BLOCK_ROWS = 256
EVEN_HARMONIC_FLOOR = 1e-4


def ponderomotive_energy(intensity: float, wavelength: float) -> float:
    """
    Ponderomotive energy U_p = 9.33e-14·I·λ² in eV.

    Args:
        intensity: Peak intensity in W/cm².
        wavelength: Wavelength in μm.
    """
    if intensity < 0:
        raise ValidationError("intensity must be non-negative")
    if wavelength <= 0:
        raise ValidationError("wavelength must be positive")
    return UP_COEFF_EV * intensity * wavelength**2


def keldysh_gamma(ip: float, up: float) -> float:
    """
    Keldysh parameter γ = √(I_p/(2U_p)); both energies in the same unit.

    Raises:
        ZeroFieldError: If up is zero.
    """
    if up <= 0:
        raise ZeroFieldError("Keldysh parameter is undefined without a field (U_p = 0)")
    return float(np.sqrt(ip / (2.0 * up)))


def cutoff_energy(up: float, ip: float) -> float:
    """Cutoff law 3.17·U_p + 1.32·I_p."""
    return CLASSICAL_CUTOFF * up + IP_CUTOFF * ip


# ---------------------------------------------------------------------------
# Pulse fields
# ---------------------------------------------------------------------------


def _envelope(pulse: LaserPulse, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    T = pulse.duration
    if pulse.envelope == "sin2":
        f = np.sin(np.pi * t / T) ** 2
        df = np.pi / T * np.sin(2.0 * np.pi * t / T)
    elif pulse.envelope == "gaussian":
        tau = GAUSSIAN_FWHM_FRACTION * T
        s = t - 0.5 * T
        f = np.exp(-2.0 * np.log(2.0) * s**2 / tau**2)
        df = -4.0 * np.log(2.0) * s / tau**2 * f
    else:
        ramp = min(pulse.period, 0.25 * T)
        f = np.ones_like(t)
        df = np.zeros_like(t)
        up_mask = t < ramp
        down_mask = t > T - ramp
        f[up_mask] = np.sin(0.5 * np.pi * t[up_mask] / ramp) ** 2
        df[up_mask] = 0.5 * np.pi / ramp * np.sin(np.pi * t[up_mask] / ramp)
        td = T - t[down_mask]
        f[down_mask] = np.sin(0.5 * np.pi * td / ramp) ** 2
        df[down_mask] = -0.5 * np.pi / ramp * np.sin(np.pi * td / ramp)
    inside = (t >= 0.0) & (t <= T)
    return np.where(inside, f, 0.0), np.where(inside, df, 0.0)


def vector_potential(pulse: LaserPulse, t) -> np.ndarray:
    """A(t) = −(F0/ω)·f(t)·sin(ω(t − T/2) + cep); zero outside the pulse window."""
    t = np.asarray(t, dtype=float)
    f, _ = _envelope(pulse, t)
    phase = pulse.omega_L * (t - 0.5 * pulse.duration) + pulse.cep
    return -pulse.F0 / pulse.omega_L * f * np.sin(phase)


def electric_field(pulse: LaserPulse, t) -> np.ndarray:
    """E(t) = −dA/dt, evaluated analytically."""
    t = np.asarray(t, dtype=float)
    f, df = _envelope(pulse, t)
    phase = pulse.omega_L * (t - 0.5 * pulse.duration) + pulse.cep
    return pulse.F0 / pulse.omega_L * (df * np.sin(phase) + pulse.omega_L * f * np.cos(phase))


def pulse_fields(pulse: LaserPulse) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, E(t), A(t)) on the pulse's uniform grid."""
    t = pulse.t_grid
    return t, electric_field(pulse, t), vector_potential(pulse, t)


# ---------------------------------------------------------------------------
# Classical trajectories
# ---------------------------------------------------------------------------


def _first_return(t: np.ndarray, a: np.ndarray, ia: np.ndarray, i0: int) -> tuple[float, float] | None:
    # x(t) = ∫_{t0}^{t} (A(s) − A(t0)) ds for an electron born at rest
    x = ia[i0:] - ia[i0] - a[i0] * (t[i0:] - t[i0])
    if x.size < 3:
        return None
    sign0 = np.sign(x[1])
    crossings = np.nonzero(np.sign(x[2:]) != sign0)[0]
    if crossings.size == 0 or sign0 == 0:
        return None
    k = crossings[0] + 2
    frac = x[k - 1] / (x[k - 1] - x[k])
    t_ret = t[i0 + k - 1] + frac * (t[i0 + k] - t[i0 + k - 1])
    a_ret = a[i0 + k - 1] + frac * (a[i0 + k] - a[i0 + k - 1])
    return float(t_ret), float(0.5 * (a_ret - a[i0]) ** 2)


def _fine_grid(pulse: LaserPulse, steps_per_cycle: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = int(round(pulse.n_cycles * steps_per_cycle))
    t = np.linspace(0.0, pulse.duration, n + 1)
    a = vector_potential(pulse, t)
    return t, a, cumulative_trapezoid(a, t, initial=0.0)


def classical_return(pulse: LaserPulse, t_ion: float, steps_per_cycle: int = 2048) -> ReturnEvent:
    """
    First recollision of an electron born at rest at t_ion.

    Solves ẍ = −E(t) with x(t_ion) = ẋ(t_ion) = 0.

    Raises:
        NoReturnsError: If the electron never comes back to x = 0 within the pulse.
    """
    if not 0.0 <= t_ion < pulse.duration:
        raise ValidationError("t_ion must lie inside the pulse window")
    t, a, ia = _fine_grid(pulse, steps_per_cycle)
    i0 = int(np.searchsorted(t, t_ion))
    hit = _first_return(t, a, ia, i0)
    if hit is None:
        raise NoReturnsError(f"no recollision for ionization at t={t_ion:.3f} a.u.")
    return ReturnEvent(t_ion=float(t[i0]), t_ret=hit[0], energy=hit[1])


def classical_return_spectrum(
    pulse: LaserPulse,
    n_ion: int = 2000,
    steps_per_cycle: int = 2048,
) -> list[ReturnEvent]:
    """
    Scan ionization times and collect the first return of every returning trajectory.

    For flat-top pulses the scan covers the flat part only; otherwise the whole window.

    Raises:
        NoReturnsError: If no ionization time leads to a recollision.
    """
    if pulse.F0 == 0:
        raise NoReturnsError("no field, no recollisions")
    t, a, ia = _fine_grid(pulse, steps_per_cycle)
    if pulse.envelope == "flat":
        ramp = min(pulse.period, 0.25 * pulse.duration)
        start, stop = ramp, pulse.duration - ramp
    else:
        start, stop = 0.0, pulse.duration
    events = []
    for t_ion in np.linspace(start, stop, n_ion, endpoint=False):
        i0 = int(np.searchsorted(t, t_ion))
        hit = _first_return(t, a, ia, i0)
        if hit is not None:
            events.append(ReturnEvent(t_ion=float(t[i0]), t_ret=hit[0], energy=hit[1]))
    if not events:
        raise NoReturnsError("no ionization time in the scan leads to a recollision")
    logger.debug(f"Classical scan: {len(events)}/{n_ion} trajectories return")
    return events


# ---------------------------------------------------------------------------
# SFA dipole
# ---------------------------------------------------------------------------


def dipole_element(v: np.ndarray, ip: float) -> np.ndarray:
    """Real part of the hydrogenic 1s bound-continuum element; the full element is i times this."""
    return 2.0**3.5 * (2.0 * ip) ** 1.25 / np.pi * v / (v**2 + 2.0 * ip) ** 3


class SFAEngine:
    """
    Evaluator of the SFA dipole response.

    The dipole is the Lewenstein double integral with the canonical momentum fixed at its
    saddle point p_s = −∫A/τ and direct quadrature over the ionization time.

    Attributes:
        settings: Regularization and excursion-window settings
        threads: Worker threads for the ionization-time row blocks
    """

    def __init__(self, settings: SfaSettings | None = None, threads: int = 1):
        """
        Initialize SFAEngine.

        Args:
            settings: SfaSettings instance. If None, defaults are used.
            threads: Number of worker threads (>= 1).
        """
        if threads < 1:
            raise ValidationError("threads must be positive")
        self.settings = settings or SfaSettings()
        self.threads = threads
        logger.info(
            f"SFAEngine initialized (epsilon={self.settings.epsilon_cycles} cycles, "
            f"excursion={self.settings.max_excursion_cycles} cycles, threads={threads})"
        )

    def _check_sampling(self, pulse: LaserPulse, atom: AtomSpec) -> None:
        omega_cut = cutoff_energy(pulse.up, atom.ip)
        nyquist = np.pi / pulse.dt
        if nyquist < 2.0 * omega_cut:
            logger.error(f"Time grid too coarse: Nyquist {nyquist:.3f} < 2*cutoff {2 * omega_cut:.3f} a.u.")
            raise GridTooCoarseError(
                f"steps_per_cycle={pulse.steps_per_cycle} undersamples twice the cutoff frequency "
                f"({2 * omega_cut:.3f} a.u.); increase steps_per_cycle"
            )

    def sfa_dipole(self, pulse: LaserPulse, atom: AtomSpec) -> DipoleSeries:
        """
        Time-dependent dipole ⟨d(t)⟩ of a single atom.

        Args:
            pulse: Driving pulse.
            atom: Target atom.

        Returns:
            DipoleSeries on the pulse's time grid.

        Raises:
            GridTooCoarseError: If the grid cannot resolve twice the cutoff frequency.
        """
        self._check_sampling(pulse, atom)
        t, e_field, a_field = pulse_fields(pulse)
        n = t.size
        if pulse.F0 == 0:
            return DipoleSeries(t=t, d=np.zeros(n), omega_L=pulse.omega_L)

        dt = pulse.dt
        k_max = max(1, int(round(self.settings.max_excursion_cycles * pulse.steps_per_cycle)))
        eps = self.settings.epsilon_cycles * pulse.period
        ia = cumulative_trapezoid(a_field, t, initial=0.0)
        ia2 = cumulative_trapezoid(a_field**2, t, initial=0.0)
        lags = np.arange(1, k_max + 1)
        tau = lags * dt
        prefactor = (2.0 * np.pi / (eps + 1j * tau)) ** 1.5

        def block(rows: np.ndarray) -> np.ndarray:
            j = rows[:, None] - lags[None, :]
            valid = j >= 0
            j = np.where(valid, j, 0)
            d_ia = ia[rows, None] - ia[j]
            d_ia2 = ia2[rows, None] - ia2[j]
            p_s = -d_ia / tau
            action = atom.ip * tau + 0.5 * d_ia2 - 0.5 * d_ia**2 / tau
            integrand = (
                prefactor
                * dipole_element(p_s + a_field[rows, None], atom.ip)
                * dipole_element(p_s + a_field[j], atom.ip)
                * e_field[j]
                * np.exp(-1j * action)
            )
            integrand = np.where(valid, integrand, 0.0)
            x = 2.0 * np.real(1j * integrand.sum(axis=1) * dt)
            return -x

        blocks = [np.arange(s, min(s + BLOCK_ROWS, n)) for s in range(0, n, BLOCK_ROWS)]
        logger.info(f"SFA dipole: {n} time steps, {k_max} excursion steps, {len(blocks)} blocks")
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                parts = list(pool.map(block, blocks))
        else:
            parts = [block(b) for b in blocks]
        return DipoleSeries(t=t, d=np.concatenate(parts), omega_L=pulse.omega_L)


def sfa_dipole(pulse: LaserPulse, atom: AtomSpec, settings: SfaSettings | None = None, threads: int = 1) -> DipoleSeries:
    """Convenience wrapper around SFAEngine.sfa_dipole."""
    return SFAEngine(settings, threads=threads).sfa_dipole(pulse, atom)


# ---------------------------------------------------------------------------
# Mode displacements
# ---------------------------------------------------------------------------


def _check_orders(dipole: DipoleSeries, n_c: int) -> None:
    if n_c < 2:
        raise ValidationError("n_c must be at least 2")
    if n_c * dipole.omega_L >= np.pi / dipole.dt:
        logger.error(f"Harmonic {n_c} above Nyquist frequency {np.pi / dipole.dt:.3f} a.u.")
        raise NyquistViolationError(f"harmonic {n_c} lies above the Nyquist frequency of the dipole grid")


def harmonic_shifts(dipole: DipoleSeries, n_c: int, g_eff: float, n_ph: int) -> HarmonicShiftSet:
    """
    χ_q = −g_eff·√q·∫⟨d(t)⟩e^{iqω_L t}dt for q = 1..n_c, multiplied by n_ph.

    Raises:
        ValidationError: If n_c < 2 or n_ph < 0.
        NyquistViolationError: If harmonic n_c is not resolved by the dipole grid.
    """
    _check_orders(dipole, n_c)
    if n_ph < 0:
        raise ValidationError("n_ph must be non-negative")
    q = np.arange(1, n_c + 1)
    phases = np.exp(1j * np.outer(q * dipole.omega_L, dipole.t))
    single = -g_eff * np.sqrt(q) * trapezoid(dipole.d[None, :] * phases, dipole.t, axis=1)
    return HarmonicShiftSet(chi=n_ph * single, n_ph=n_ph, g_eff=g_eff)


def harmonic_shift_history(dipole: DipoleSeries, n_c: int, g_eff: float, n_ph: int) -> np.ndarray:
    """χ_q accumulated from the pulse start to every grid time, shape (len(t), n_c)."""
    _check_orders(dipole, n_c)
    q = np.arange(1, n_c + 1)
    integrand = dipole.d[:, None] * np.exp(1j * np.outer(dipole.t, q * dipole.omega_L))
    return -n_ph * g_eff * np.sqrt(q)[None, :] * cumulative_trapezoid(integrand, dipole.t, axis=0, initial=0.0)


def calibrate_coupling(dipole: DipoleSeries, chi1_target: float, n_ph: int = 1) -> float:
    """
    Coupling g_eff for which |χ_1| equals chi1_target.

    Raises:
        ZeroFieldError: If the dipole has no component at the fundamental.
    """
    if chi1_target <= 0:
        raise ValidationError("chi1_target must be positive")
    ref = abs(harmonic_shifts(dipole, 2, 1.0, max(n_ph, 1)).chi[0])
    if ref == 0:
        raise ZeroFieldError("dipole has no fundamental component; cannot calibrate the coupling")
    return chi1_target / ref


def dipole_spectrum(dipole: DipoleSeries, orders: np.ndarray | None = None, oversample: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """
    Power |∫d(t)e^{iωt}dt|² against harmonic order ω/ω_L.

    With explicit orders the transform is evaluated exactly at those frequencies;
    otherwise a zero-padded FFT is used.
    """
    if orders is not None:
        orders = np.asarray(orders, dtype=float)
        phases = np.exp(1j * np.outer(orders * dipole.omega_L, dipole.t))
        amp = trapezoid(dipole.d[None, :] * phases, dipole.t, axis=1)
        return orders, np.abs(amp) ** 2
    n = dipole.t.size * oversample
    amp = rfft(dipole.d, n=n) * dipole.dt
    omega = 2.0 * np.pi * rfftfreq(n, d=dipole.dt)
    return omega / dipole.omega_L, np.abs(amp) ** 2


def plateau_cutoff_order(shifts: HarmonicShiftSet, q_min: int = 7) -> int:
    """
    Plateau edge of |χ_q|² over odd orders.

    Fits log10|χ_q|² with a hinge (flat plateau, then linear decline) for every candidate
    edge and returns the best-fitting edge order.
    """
    q = shifts.orders
    mask = (q % 2 == 1) & (q >= q_min)
    qo = q[mask]
    if qo.size < 4:
        raise ValidationError("not enough odd harmonics above q_min to locate the cutoff")
    level = np.log10(np.maximum(shifts.power[mask], 1e-300))
    best_q, best_res = int(qo[-1]), np.inf
    for edge in qo[1:-1]:
        hinge = np.maximum(qo - edge, 0.0)
        design = np.column_stack([np.ones_like(qo, dtype=float), hinge])
        coef, *_ = np.linalg.lstsq(design, level, rcond=None)
        if coef[1] >= 0:
            continue
        res = float(np.sum((design @ coef - level) ** 2))
        if res < best_res:
            best_q, best_res = int(edge), res
    return best_q


def harmonic_parity_ratio(shifts: HarmonicShiftSet, q_lo: int = 8, q_hi: int = 12) -> float:
    """
    Even-to-odd power ratio Σ|χ_even|²/Σ|χ_odd|² over orders q_lo..q_hi.

    A long multicycle pulse keeps the half-cycle symmetry of the dipole and the ratio falls
    below EVEN_HARMONIC_FLOOR. Few-cycle windows break it and even orders reappear.

    Raises:
        ValidationError: If the window is empty, exceeds n_c or carries no odd power.
    """
    if q_lo < 1 or q_hi <= q_lo or q_hi > shifts.n_c:
        raise ValidationError(f"parity window {q_lo}..{q_hi} does not fit 1..{shifts.n_c}")
    q = shifts.orders
    window = (q >= q_lo) & (q <= q_hi)
    odd = float(shifts.power[window & (q % 2 == 1)].sum())
    if odd == 0.0:
        raise ValidationError("no odd-harmonic power in the parity window")
    return float(shifts.power[window & (q % 2 == 0)].sum()) / odd
