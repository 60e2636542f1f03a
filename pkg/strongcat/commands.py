"""
Subcommand implementations for strongcat.

Each command is a plain function taking a validated RunConfig, writing its artifacts into
cfg.output_dir and returning a JSON-serializable summary. run_command wraps a command with
the config echo and the run.json manifest, so every output directory can be reproduced.

Usage:
    >>> from strongcat.config import RunConfig
    >>> from strongcat.commands import run_command
    >>> summary = run_command("wigner", RunConfig(output_dir="out"))
    >>> summary["files"]
"""

import logging
import time
from functools import partial
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import artifacts
from .ati import AtiSynthesizer, ati_field_state, entropy_energy_sweep, momentum_grid
from .conditioning import (
    condition_on_hhg,
    displacement_centroid,
    ir_cat,
    linear_entropy,
    linear_entropy_sweep,
    no_harmonic_probability,
    post_hhg_product,
    two_color_condition,
    xuv_cat,
)
from .config import RunConfig, StateSettings, hartree_to_ev, resolve_threads
from .errors import InsufficientPhasesError, MissingInputError, NumericalError, ValidationError
from .phase_space import (
    coherent_fock_coeffs,
    css_fock_coeffs,
    fock_state,
    g2_zero,
    mandel_q,
    mean_photon,
    photon_distribution,
    required_truncation,
    shifted_cat,
    squeezed_fock_coeffs,
    wigner_coherent,
    wigner_css,
    wigner_fock,
    wigner_fock_basis,
    wigner_grid,
    wigner_squeezed,
)
from .schemas import (
    CoherentAmplitude,
    CoherentSuperposition,
    DensityMatrix,
    DipoleSeries,
    ElectronTag,
    EntangledMultimodeState,
    FockVector,
    HarmonicShiftSet,
    SqueezeParams,
)
from .sfa import (
    EVEN_HARMONIC_FLOOR,
    SFAEngine,
    calibrate_coupling,
    classical_return_spectrum,
    cutoff_energy,
    harmonic_parity_ratio,
    harmonic_shift_history,
    harmonic_shifts,
    keldysh_gamma,
    plateau_cutoff_order,
)
from .spectrometer import (
    QuantumSpectrometer,
    conditioned_pir,
    diagonal_mask,
    estimate_line_width,
    fit_anticorrelation_line,
    peak_positions,
    peak_spacing,
    pearson_r,
    selection_precision,
)
from .tomography import HomodyneTomographer, fidelity, quadrature_pdf, wigner_from_rho

logger = logging.getLogger(__name__)

SQUEEZE_LEAKAGE = 1e-10


# ---------------------------------------------------------------------------
# Shared builders
# ---------------------------------------------------------------------------


def _squeezed_truncation(alpha: complex, k: float) -> int:
    base = required_truncation(abs(alpha) * np.exp(abs(k)))
    if k == 0:
        return base
    return base + int(np.ceil(np.log(SQUEEZE_LEAKAGE) / np.log(np.tanh(abs(k)))))


def build_state(settings: StateSettings) -> tuple[str, Callable[[np.ndarray], np.ndarray], FockVector | DensityMatrix]:
    """
    Resolve a single-mode state descriptor.

    Returns:
        (descriptor, closed-form Wigner function of β, Fock-basis state for sampling)

    Raises:
        MissingInputError: If kind=file and the state file is absent.
        ValidationError: If the state file holds a multimode state.
    """
    s = settings
    alpha = complex(s.alpha)
    if s.kind == "coherent":
        n = s.n_trunc or required_truncation(alpha)
        return f"coherent(alpha={alpha:.4g})", partial(wigner_coherent, alpha), coherent_fock_coeffs(alpha, n)
    if s.kind == "fock":
        n = s.n_trunc or max(s.n + 2, required_truncation(np.sqrt(s.n)))
        return f"fock(n={s.n})", partial(wigner_fock, s.n), fock_state(s.n, n)
    if s.kind == "squeezed":
        params = SqueezeParams(k=s.k, alpha=CoherentAmplitude.of(alpha))
        n = s.n_trunc or _squeezed_truncation(alpha, s.k)
        return f"squeezed(alpha={alpha:.4g}, k={s.k:.4g})", partial(wigner_squeezed, params), squeezed_fock_coeffs(params, n)
    if s.kind == "cat":
        chi = complex(s.chi)
        css = shifted_cat(alpha, chi)
        n = s.n_trunc or required_truncation(abs(alpha) + abs(chi))
        return f"cat(alpha={alpha:.4g}, chi={chi:.4g})", partial(wigner_css, css), css_fock_coeffs(css, n)

    if s.path is None:
        raise ValidationError("state.path is required for kind=file")
    state = artifacts.read_state(s.path)
    descriptor = f"file({Path(s.path).name})"
    if isinstance(state, EntangledMultimodeState):
        if state.mode_count != 1:
            raise ValidationError(f"{s.path} holds a {state.mode_count}-mode state; a single mode is required")
        state = CoherentSuperposition(coeffs=state.amplitudes, alphas=state.alpha_matrix[:, 0], label=descriptor)
    if isinstance(state, CoherentSuperposition):
        n = s.n_trunc or required_truncation(float(np.max(np.abs(state.alphas))))
        return descriptor, partial(wigner_css, state), css_fock_coeffs(state, n)
    rho = DensityMatrix.from_vector(state) if isinstance(state, FockVector) else state
    return descriptor, partial(wigner_fock_basis, rho), rho


def _sfa_shifts(cfg: RunConfig, n_c: int, threads: int) -> tuple[DipoleSeries, HarmonicShiftSet]:
    pulse, atom = cfg.pulse.to_pulse(), cfg.atom.to_atom()
    dipole = SFAEngine(cfg.sfa, threads=threads).sfa_dipole(pulse, atom)
    c = cfg.coupling
    g_eff = calibrate_coupling(dipole, c.chi1_target, c.n_ph) if c.chi1_target else c.g_eff
    return dipole, harmonic_shifts(dipole, n_c, g_eff, c.n_ph)


def condition_shifts(
    cfg: RunConfig, threads: int = 1, n_c_min: int = 2, need_fundamental: bool = True
) -> HarmonicShiftSet:
    """
    Mode shifts used by the conditioning commands.

    χ_1 comes from conditioning.chi1 when set; the harmonics are harmonic_chi on the odd orders
    3..cutoff_order when set. Whatever is not overridden comes from the SFA dipole. Callers that
    replace χ_1 themselves pass need_fundamental=False, so harmonic_chi alone avoids the SFA.
    """
    c = cfg.conditioning
    n_c = max(n_c_min, c.cutoff_order if c.harmonic_chi is not None else cfg.coupling.n_c)
    if (c.chi1 is None and need_fundamental) or c.harmonic_chi is None:
        _, sfa = _sfa_shifts(cfg, n_c, threads)
        chi = np.array(sfa.chi, dtype=complex)
        n_ph, g_eff = sfa.n_ph, sfa.g_eff
    else:
        chi = np.zeros(n_c, dtype=complex)
        n_ph, g_eff = cfg.coupling.n_ph, cfg.coupling.g_eff
    if c.chi1 is not None:
        chi[0] = c.chi1
    if c.harmonic_chi is not None:
        q = np.arange(2, n_c + 1)
        chi[1:] = np.where((q % 2 == 1) & (q >= 3) & (q <= c.cutoff_order), c.harmonic_chi, 0.0)
    return HarmonicShiftSet(chi=chi, n_ph=n_ph, g_eff=g_eff)


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pad(rho: DensityMatrix, n: int) -> DensityMatrix:
    m = np.zeros((n, n), dtype=complex)
    k = rho.n_trunc
    m[:k, :k] = rho.elements
    return DensityMatrix(elements=m)


def _write_photon_distribution(state: FockVector | DensityMatrix, path: Path) -> Path:
    pops = photon_distribution(state)
    return artifacts.write_rows(path, ["n", "probability"], ((n, float(p)) for n, p in enumerate(pops)))


def _statistics(state: FockVector | DensityMatrix) -> dict[str, float | None]:
    mean = mean_photon(state)
    stats: dict[str, float | None] = {"mean_photon": mean, "g2": None, "mandel_q": None}
    if mean > 1e-12:
        stats["g2"] = g2_zero(state)
        stats["mandel_q"] = mandel_q(state)
    return stats


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_wigner(cfg: RunConfig, threads: int = 1) -> dict[str, Any]:
    """Wigner grid, quadrature marginals and a simulated homodyne trace of the configured state."""
    out = _out(cfg)
    descriptor, wfunc, fock = build_state(cfg.state)
    grid = wigner_grid(wfunc, cfg.grid, descriptor)
    files = artifacts.write_wigner(grid, out / "wigner.csv")

    x = cfg.grid.x
    marginals = zip(x, quadrature_pdf(fock, 0.0, x), quadrature_pdf(fock, 0.5 * np.pi, x))
    files.append(artifacts.write_rows(out / "marginals.csv", ["x", "p_phi0", "p_phi_pi2"],
                                      ((float(a), float(b), float(c)) for a, b, c in marginals)))

    tomographer = HomodyneTomographer(cfg.tomography, threads=threads)
    trace = tomographer.sample(fock, seed=cfg.seed)
    trace = trace.model_copy(update={"provenance": {**trace.provenance, "state": descriptor}})
    files += artifacts.write_trace(trace, out / "trace.csv")
    files.append(artifacts.write_state(fock, out / "state.json"))

    i0 = int(np.argmin(np.abs(cfg.grid.x))), int(np.argmin(np.abs(cfg.grid.p)))
    return {
        "descriptor": descriptor,
        "integral": grid.integral(),
        "w_max": float(grid.values.max()),
        "w_min": float(grid.values.min()),
        "w_origin": float(grid.values[i0[1], i0[0]]),
        **_statistics(fock),
        "files": [str(f) for f in files],
    }


def cmd_hhg(cfg: RunConfig, threads: int = 1) -> dict[str, Any]:
    """SFA dipole, |χ_q|² spectrum and cutoff diagnostics."""
    out = _out(cfg)
    pulse, atom = cfg.pulse.to_pulse(), cfg.atom.to_atom()
    up_ev = hartree_to_ev(pulse.up)
    ip_ev = hartree_to_ev(atom.ip)
    summary: dict[str, Any] = {
        "up_ev": up_ev,
        "ip_ev": ip_ev,
        "cutoff_ev": cutoff_energy(up_ev, ip_ev),
        "cutoff_order": cutoff_energy(pulse.up, atom.ip) / pulse.omega_L,
    }
    if pulse.F0 == 0:
        logger.warning("Zero driving field: no harmonics are generated")
        files = [artifacts.write_rows(out / "spectrum.csv", ["q", "power", "phase"], [])]
        summary.update({"keldysh_gamma": None, "note": "zero field: empty spectrum", "files": [str(f) for f in files]})
        return summary

    dipole, shifts = _sfa_shifts(cfg, cfg.coupling.n_c, threads)
    files = [artifacts.write_dipole(dipole, out / "dipole.csv"), artifacts.write_spectrum(shifts, out / "spectrum.csv")]
    max_return = max(e.energy for e in classical_return_spectrum(pulse))
    try:
        edge: int | None = plateau_cutoff_order(shifts)
    except ValidationError as e:
        logger.warning(f"Plateau edge not located: {e}")
        edge = None
    parity = harmonic_parity_ratio(shifts) if shifts.n_c >= 12 else None
    if parity is not None and parity > EVEN_HARMONIC_FLOOR:
        summary["note"] = (
            f"{pulse.n_cycles:g}-cycle {pulse.envelope} window breaks the half-cycle symmetry: "
            f"even/odd power {parity:.2g} over H8-H12; use a longer pulse for odd-only spectra"
        )
    summary.update({
        "keldysh_gamma": keldysh_gamma(atom.ip, pulse.up),
        "even_odd_ratio": parity,
        "classical_max_return_up": max_return / pulse.up,
        "plateau_edge_order": edge,
        "g_eff": shifts.g_eff,
        "n_ph": shifts.n_ph,
        "total_power": float(shifts.power.sum()),
        "files": [str(f) for f in files],
    })
    return summary


def _condition_cat(cfg: RunConfig, threads: int) -> dict[str, Any]:
    out = _out(cfg)
    c = cfg.conditioning
    shifts = condition_shifts(cfg, threads, n_c_min=c.q if c.mode == "xuv-cat" else 2)
    product = post_hhg_product(c.alpha_L, shifts)
    state = condition_on_hhg(product, c.alpha_L)
    if c.mode == "ir-cat":
        cat, reference = ir_cat(state), complex(c.alpha_L)
    else:
        cat, reference = xuv_cat(state, c.q), 0j
    n = required_truncation(float(np.max(np.abs(cat.alphas))))
    fock = css_fock_coeffs(cat, n)
    grid = wigner_grid(partial(wigner_css, cat), cfg.grid, cat.label or c.mode)
    files = [
        artifacts.write_state(state, out / "state.json"),
        artifacts.write_state(cat, out / "cat.json"),
        *artifacts.write_wigner(grid, out / "wigner_cat.csv"),
        _write_photon_distribution(fock, out / "photon_distribution.csv"),
    ]
    centroid = displacement_centroid(cat, reference)
    return {
        "mode": c.mode,
        "chi1": [shifts.chi[0].real, shifts.chi[0].imag],
        "probability": state.weight,
        "no_harmonic_probability": no_harmonic_probability(product, c.alpha_L),
        "linear_entropy": linear_entropy(state, [0]),
        "centroid": [centroid.real, centroid.imag],
        "w_min": float(grid.values.min()),
        **_statistics(fock),
        "files": [str(f) for f in files],
    }


def _condition_two_color(cfg: RunConfig, threads: int) -> dict[str, Any]:
    out = _out(cfg)
    c = cfg.conditioning
    shifts = condition_shifts(cfg, threads)
    state = two_color_condition(c.alpha_L, c.alpha2, shifts.chi[0], c.chi2, shifts.chi[2::2])
    files = [artifacts.write_state(state, out / "state.json")]
    return {
        "mode": c.mode,
        "probability": state.weight,
        "linear_entropy": linear_entropy(state, [0]),
        "files": [str(f) for f in files],
    }


def _condition_ati(cfg: RunConfig, threads: int) -> dict[str, Any]:
    out = _out(cfg)
    c = cfg.conditioning
    pulse, atom = cfg.pulse.to_pulse(), cfg.atom.to_atom()
    history = None
    if c.ati_modes > 1:
        dipole, shifts = _sfa_shifts(cfg, max(2, c.ati_modes), threads)
        history = harmonic_shift_history(dipole, shifts.n_c, shifts.g_eff, shifts.n_ph)
    synth = AtiSynthesizer(atom, c.ati_alpha_L, n_modes=c.ati_modes, g_eff=c.ati_g_eff,
                           tsteps_per_cycle=c.tsteps_per_cycle, max_tsteps_per_cycle=c.max_tsteps_per_cycle,
                           threads=threads)
    tag = ElectronTag(v=float(c.momentum_sign * c.momentum_up * np.sqrt(pulse.up)))
    state = synth.conditioned_state(pulse, tag, history)
    field = ati_field_state(state)
    files = [
        artifacts.write_state(field, out / "ati_field.json"),
        _write_photon_distribution(field, out / "photon_distribution.csv"),
    ]
    summary: dict[str, Any] = {
        "mode": c.mode,
        "momentum": tag.v,
        "ionization_weight": state.weight,
        "branches": len(state.branches),
        **_statistics(field),
    }
    if c.momentum_points > 1:
        tags = momentum_grid(pulse, c.momentum_up, c.momentum_points)
        rho = synth.mixed_state(pulse, tags, weighting=c.weighting, n_trunc=field.n_trunc)
        files += [
            artifacts.write_density_matrix(rho, out / "ati_mixed.json"),
            _write_photon_distribution(rho, out / "photon_distribution_mixed.csv"),
        ]
        summary["mixed_mean_photon"] = mean_photon(rho)
        summary["mixed_purity"] = rho.purity
    summary["files"] = [str(f) for f in files]
    return summary


def cmd_condition(cfg: RunConfig, threads: int = 1) -> dict[str, Any]:
    """HHG (or ATI) conditioning according to conditioning.mode."""
    mode = cfg.conditioning.mode
    if mode in ("ir-cat", "xuv-cat"):
        return _condition_cat(cfg, threads)
    if mode == "two-color":
        return _condition_two_color(cfg, threads)
    return _condition_ati(cfg, threads)


def cmd_tomo(cfg: RunConfig, threads: int = 1) -> dict[str, Any]:
    """
    MaxLik reconstruction (plus back-projection) of a homodyne trace.

    The trace is read from tomography.input when given, otherwise sampled from the configured
    state. Fidelity is reported against the configured state.
    """
    out = _out(cfg)
    t = cfg.tomography
    descriptor, _, truth = build_state(cfg.state)
    tomographer = HomodyneTomographer(t, threads=threads)
    files: list[Path] = []
    if t.input is not None:
        if not Path(t.input).is_file():
            raise MissingInputError(f"homodyne trace not found: {t.input}")
        trace = artifacts.read_trace(t.input)
    else:
        trace = tomographer.sample(truth, seed=cfg.seed)
        trace = trace.model_copy(update={"provenance": {**trace.provenance, "state": descriptor}})
        files += artifacts.write_trace(trace, out / "trace.csv")

    rho, report = tomographer.reconstruct(trace, t.n_trunc)
    truth_rho = truth if isinstance(truth, DensityMatrix) else DensityMatrix.from_vector(truth)
    n = max(rho.n_trunc, truth_rho.n_trunc)
    fid = fidelity(_pad(rho, n), _pad(truth_rho, n))
    files.append(artifacts.write_density_matrix(rho, out / "rho.json"))
    files.append(artifacts.write_rows(out / "likelihood.csv", ["iteration", "log_likelihood"],
                                      ((i + 1, float(v)) for i, v in enumerate(report.history))))
    files += artifacts.write_wigner(wigner_from_rho(rho, cfg.grid, f"maxlik[{descriptor}]"), out / "wigner_maxlik.csv")
    try:
        files += artifacts.write_wigner(tomographer.inverse_radon(trace, cfg.grid), out / "wigner_radon.csv")
    except InsufficientPhasesError as e:
        logger.warning(f"Skipping back-projection: {e}")

    report_doc = {
        **report.model_dump(exclude={"history"}),
        "fidelity": fid,
        "truth": descriptor,
        "truth_mean_photon": mean_photon(truth_rho),
        "n_trunc": rho.n_trunc,
    }
    files.append(artifacts.write_json(out / "report.json", report_doc))
    return {**report_doc, "files": [str(f) for f in files]}


def cmd_qs(cfg: RunConfig, threads: int = 1) -> dict[str, Any]:
    """Quantum-spectrometer shots, diagonal selection and conditioned P_IR; the run seed drives the shots."""
    out = _out(cfg)
    model = cfg.qs.model_copy(update={"seed": cfg.seed})
    shots = QuantumSpectrometer(model, threads=threads).simulate_shots()
    line = fit_anticorrelation_line(shots)
    width = estimate_line_width(shots, line)
    mask = diagonal_mask(shots, width, line)
    selected = shots.subset(mask)
    hist = conditioned_pir(selected, line=line, exclude_dark=True)
    try:
        spacing: float | None = peak_spacing(hist)
    except NumericalError as e:
        logger.warning(f"No peak spacing: {e}")
        spacing = None
    files = [artifacts.write_shots(shots, mask, out / "shots.csv"), artifacts.write_pir(hist, out / "pir.csv")]
    return {
        "shots": len(shots),
        "selected": len(selected),
        "slope": line.slope,
        "width": width,
        "pearson_r_all": pearson_r(shots),
        "pearson_r_selected": pearson_r(selected),
        "precision": selection_precision(selected),
        "peak_positions": peak_positions(hist).tolist(),
        "peak_spacing": spacing,
        "q_eff": model.q_eff,
        "files": [str(f) for f in files],
    }


def cmd_sweep(cfg: RunConfig, threads: int = 1) -> dict[str, Any]:
    """Linear entropy against |χ_1|, or entanglement entropy against photoelectron energy."""
    out = _out(cfg)
    c = cfg.conditioning
    if c.sweep_kind == "linear":
        harm = condition_shifts(cfg, threads, need_fundamental=False).chi[1:]
        chi1 = np.linspace(c.sweep_min, c.sweep_max, c.sweep_points).astype(complex)
        rows = linear_entropy_sweep(c.alpha_L, chi1, harm)
        path = artifacts.write_rows(out / "linear_entropy.csv", ["chi1_abs", "s_lin"], rows)
        values = np.array([s for _, s in rows])
        k = int(np.argmax(values))
        return {
            "kind": "linear",
            "points": len(rows),
            "max_s_lin": float(values[k]),
            "argmax_chi1": rows[k][0],
            "last_s_lin": float(values[-1]),
            "files": [str(path)],
        }

    rows = entropy_energy_sweep(
        cfg.atom.to_atom(), c.omegas, c.energies_up,
        intensity_wcm2=c.sweep_intensity_wcm2, n_cycles=c.sweep_cycles, alpha_L=c.ati_alpha_L,
        g_eff=c.sweep_g_eff, n_tsteps=c.tsteps_per_cycle, max_tsteps=c.max_tsteps_per_cycle, threads=threads,
    )
    path = artifacts.write_rows(out / "entanglement_entropy.csv", ["omega_au", "energy_up", "entropy_bits"], rows)
    return {"kind": "energy", "points": len(rows), "max_entropy": max(r[2] for r in rows), "files": [str(path)]}


COMMANDS: dict[str, Callable[[RunConfig, int], dict[str, Any]]] = {
    "wigner": cmd_wigner,
    "hhg": cmd_hhg,
    "condition": cmd_condition,
    "tomo": cmd_tomo,
    "qs": cmd_qs,
    "sweep": cmd_sweep,
}


def run_command(name: str, cfg: RunConfig) -> dict[str, Any]:
    """
    Run one subcommand with config echo and manifest.

    Raises:
        ValidationError: If the command name is unknown.
    """
    if name not in COMMANDS:
        raise ValidationError(f"unknown command {name!r}; expected one of {sorted(COMMANDS)}")
    threads = resolve_threads(cfg)
    out = _out(cfg)
    logger.info(f"Running {name} into {out} (seed={cfg.seed}, threads={threads})")
    start = time.perf_counter()
    summary = COMMANDS[name](cfg, threads)
    config_path = artifacts.echo_config(cfg, out)
    files = [*summary["files"], str(config_path)]
    artifacts.write_manifest(out, name, cfg, files, time.perf_counter() - start, summary)
    return summary
