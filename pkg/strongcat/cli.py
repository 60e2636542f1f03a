"""
Command-line interface of strongcat.

    strongcat [--config PATH] [--seed N] [--out DIR] [--threads N] [--log-level LEVEL] <command> [options]

Commands: wigner | hhg | condition | tomo | qs | sweep. Flags override the configuration
file, which overrides the built-in defaults. Exit codes: 0 success, 2 usage, configuration,
validation or missing input, 3 numerical failure, 1 any other error.
"""

import argparse
import json
import logging
import sys
from typing import Any, Sequence

from .commands import run_command
from .config import RunConfig, load_config, validate_config
from .errors import ConfigurationError, MissingInputError, NumericalError, StrongCatError, ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

LOG_FORMAT = "%(asctime)s [%(levelname)8s] %(message)s"

# flag destination -> dotted config path
OVERRIDES: dict[str, str] = {
    "seed": "seed",
    "out": "output_dir",
    "threads": "threads",
    # state
    "state": "state.kind",
    "alpha": "state.alpha",
    "chi": "state.chi",
    "n": "state.n",
    "k": "state.k",
    "state_file": "state.path",
    "n_trunc": "state.n_trunc",
    # pulse and atom
    "intensity": "pulse.intensity_wcm2",
    "wavelength": "pulse.wavelength_nm",
    "duration": "pulse.duration_fs",
    "cycles": "pulse.n_cycles",
    "cep": "pulse.cep",
    "steps_per_cycle": "pulse.steps_per_cycle",
    "ip": "atom.ip_ev",
    "n_c": "coupling.n_c",
    "g_eff": "coupling.g_eff",
    "n_ph": "coupling.n_ph",
    "chi1_target": "coupling.chi1_target",
    # conditioning
    "mode": "conditioning.mode",
    "alpha_l": "conditioning.alpha_L",
    "chi1": "conditioning.chi1",
    "harmonic_chi": "conditioning.harmonic_chi",
    "cutoff_order": "conditioning.cutoff_order",
    "q": "conditioning.q",
    "momentum": "conditioning.momentum_up",
    "sign": "conditioning.momentum_sign",
    "momentum_points": "conditioning.momentum_points",
    "weighting": "conditioning.weighting",
    "kind": "conditioning.sweep_kind",
    "chi_min": "conditioning.sweep_min",
    "chi_max": "conditioning.sweep_max",
    "points": "conditioning.sweep_points",
    # tomography
    "input": "tomography.input",
    "phases": "tomography.n_phases",
    "shots_per_phase": "tomography.shots_per_phase",
    "eta": "tomography.eta",
    "bin_width": "tomography.bin_width",
    "max_iter": "tomography.max_iter",
    "tol": "tomography.tol",
    "recon_trunc": "tomography.n_trunc",
    # quantum spectrometer
    "shots": "qs.shots",
    "hhg_fraction": "qs.hhg_fraction",
    "q_orders": "qs.q_orders",
    "discrete": "qs.discrete",
    "noise_ir": "qs.noise_ir",
}


def _complex(text: str) -> list[float]:
    try:
        z = complex(text.replace(" ", ""))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from e
    return [z.real, z.imag]


def _global_flags() -> argparse.ArgumentParser:
    # defaults are suppressed so the flags work before and after the subcommand
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=argparse.SUPPRESS, help="YAML/JSON configuration file")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="Master seed")
    p.add_argument("--out", default=argparse.SUPPRESS, help="Output directory")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="Worker threads (env: STRONGCAT_THREADS)")
    p.add_argument("--log-level", default=argparse.SUPPRESS,
                   choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level (default: INFO)")
    return p


def _state_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--state", choices=["coherent", "fock", "squeezed", "cat", "file"], help="State kind")
    p.add_argument("--alpha", type=_complex, help="Coherent amplitude, e.g. 2 or 1+0.5j")
    p.add_argument("--chi", type=_complex, help="Cat shift")
    p.add_argument("--n", type=int, help="Fock number")
    p.add_argument("--k", type=float, help="Squeezing parameter")
    p.add_argument("--state-file", help="State JSON for --state file")
    p.add_argument("--n-trunc", type=int, help="Fock truncation")


def _pulse_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--intensity", type=float, help="Peak intensity (W/cm²)")
    p.add_argument("--wavelength", type=float, help="Wavelength (nm)")
    p.add_argument("--duration", type=float, help="Pulse window (fs)")
    p.add_argument("--cycles", type=float, help="Pulse window (optical cycles)")
    p.add_argument("--cep", type=float, help="Carrier-envelope phase (rad)")
    p.add_argument("--steps-per-cycle", type=int, help="Time samples per cycle")
    p.add_argument("--ip", type=float, help="Ionization potential (eV)")


def _coupling_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-c", type=int, help="Number of field modes")
    p.add_argument("--g-eff", type=float, help="Coupling constant")
    p.add_argument("--n-ph", type=int, help="Phase-matched atom count")
    p.add_argument("--chi1-target", type=float, help="Calibrate g_eff to this |χ_1|")


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(
        prog="strongcat",
        description="Strong-field quantum-optics simulator: HHG/ATI conditioning, cat states and tomography",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("wigner", parents=[common], help="Wigner grid and homodyne trace of a state")
    _state_flags(p)
    p.add_argument("--phases", type=int, help="Homodyne phases")
    p.add_argument("--shots-per-phase", type=int, help="Samples per phase")

    p = sub.add_parser("hhg", parents=[common], help="SFA dipole, harmonic spectrum and cutoff")
    _pulse_flags(p)
    _coupling_flags(p)

    p = sub.add_parser("condition", parents=[common], help="Condition the field on HHG or ATI")
    p.add_argument("--mode", choices=["ir-cat", "xuv-cat", "two-color", "ati"], help="Conditioning mode")
    p.add_argument("--alpha", dest="alpha_l", type=_complex, help="Driving amplitude α_L")
    p.add_argument("--chi1", type=_complex, help="Fundamental shift override")
    p.add_argument("--harmonic-chi", type=float, help="Uniform plateau harmonic shift")
    p.add_argument("--cutoff-order", type=int, help="Last plateau harmonic")
    p.add_argument("--q", type=int, help="Harmonic order for xuv-cat")
    p.add_argument("--momentum", type=float, help="ATI |p| in units of √U_p")
    p.add_argument("--sign", type=int, choices=[1, -1], help="ATI momentum sign")
    p.add_argument("--momentum-points", type=int, help="ATI mixed-state momenta")
    p.add_argument("--weighting", choices=["uniform", "sfa"], help="ATI mixed-state weighting")
    _pulse_flags(p)
    _coupling_flags(p)

    p = sub.add_parser("tomo", parents=[common], help="MaxLik and back-projection tomography")
    _state_flags(p)
    p.add_argument("--input", help="Homodyne trace CSV (phi, x)")
    p.add_argument("--phases", type=int, help="Homodyne phases")
    p.add_argument("--shots-per-phase", type=int, help="Samples per phase")
    p.add_argument("--eta", type=float, help="Detector efficiency")
    p.add_argument("--bin-width", type=float, help="Likelihood bin width")
    p.add_argument("--max-iter", type=int, help="MaxLik iteration limit")
    p.add_argument("--tol", type=float, help="MaxLik stopping tolerance")
    p.add_argument("--recon-trunc", type=int, help="Reconstruction truncation")

    p = sub.add_parser("qs", parents=[common], help="Quantum-spectrometer shot selection and P_IR")
    p.add_argument("--shots", type=int, help="Number of shots")
    p.add_argument("--hhg-fraction", type=float, help="Correlated-shot probability")
    p.add_argument("--q-orders", type=int, nargs="+", help="Harmonic orders of correlated photons")
    p.add_argument("--discrete", action=argparse.BooleanOptionalAction, default=None,
                   help="Discrete harmonic photon numbers")
    p.add_argument("--noise-ir", type=float, help="Relative IR signal noise")

    p = sub.add_parser("sweep", parents=[common], help="Entropy sweeps")
    p.add_argument("--kind", choices=["linear", "energy"], help="Sweep kind")
    p.add_argument("--alpha", dest="alpha_l", type=_complex, help="Driving amplitude α_L")
    p.add_argument("--chi-min", type=float, help="Sweep start |χ_1|")
    p.add_argument("--chi-max", type=float, help="Sweep end |χ_1|")
    p.add_argument("--points", type=int, help="Sweep samples")
    p.add_argument("--harmonic-chi", type=float, help="Uniform plateau harmonic shift")
    p.add_argument("--cutoff-order", type=int, help="Last plateau harmonic")
    _pulse_flags(p)
    _coupling_flags(p)
    return parser


def _set(data: dict[str, Any], dotted: str, value: Any) -> None:
    node = data
    *parents, leaf = dotted.split(".")
    for key in parents:
        node = node.setdefault(key, {})
    node[leaf] = value


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """
    Merge the configuration file (if any) with command-line overrides.

    Raises:
        ConfigurationError: If the file or any override is invalid.
    """
    path = getattr(args, "config", None)
    base = load_config(path) if path else RunConfig()
    data = base.model_dump(mode="json", by_alias=True)
    applied = []
    for dest, dotted in OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            _set(data, dotted, value)
            applied.append(dotted)
    if not applied:
        return base
    logger.debug(f"Command-line overrides: {', '.join(applied)}")
    return validate_config(data, source="<command line>")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(args, "log_level", "INFO"), format=LOG_FORMAT)

    try:
        cfg = resolve_config(args)
        summary = run_command(args.command, cfg)
    except (ConfigurationError, ValidationError, MissingInputError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_USAGE
    except NumericalError as e:
        logger.error(f"{args.command}: numerical failure ({type(e).__name__}): {e}")
        return EXIT_NUMERICAL
    except StrongCatError as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_ERROR

    print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
