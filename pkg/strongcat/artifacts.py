"""
File formats of strongcat artifacts.

Every CSV is written with "\\n" line endings and floats in 17-significant-digit form, so
re-running a command with the same configuration reproduces its CSV files byte for byte.
JSON documents are written with sorted keys and two-space indentation.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import pydantic
import scipy

from . import __version__
from .config import RunConfig
from .errors import MissingInputError, ValidationError
from .schemas import (
    CoherentSuperposition,
    DensityMatrix,
    DipoleSeries,
    EntangledMultimodeState,
    FockVector,
    HarmonicShiftSet,
    HomodyneTrace,
    PirHistogram,
    ShotTable,
    WignerGrid,
)

logger = logging.getLogger(__name__)

MANIFEST_NAME = "run.json"
CONFIG_ECHO_NAME = "config.json"


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_json(path: str | Path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_json(path: str | Path) -> Any:
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"input file not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path} is not valid JSON: {e}") from e


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a CSV; floats are formatted with fmt, everything else with str."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row])
    return path


def _read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"input file not found: {path}")
    with path.open("r", encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ValidationError(f"{path} is empty")
    return rows[0], rows[1:]


# ---------------------------------------------------------------------------
# Phase space
# ---------------------------------------------------------------------------


def write_wigner(grid: WignerGrid, path: str | Path) -> list[Path]:
    """
    Write a Wigner grid as CSV plus JSON metadata.

    The CSV header row holds the x samples, the first column the p samples and each
    cell W(x, p). The metadata file sits next to it with a .json suffix.
    """
    path = Path(path)
    rows = ([float(p), *map(float, grid.values[i])] for i, p in enumerate(grid.p))
    write_rows(path, ["p\\x", *(fmt(x) for x in grid.x)], rows)
    meta = {
        "x_range": list(grid.x_range),
        "p_range": list(grid.p_range),
        "nx": grid.nx,
        "np": grid.np_,
        "descriptor": grid.descriptor,
        "convention": grid.convention,
        "integral": grid.integral(),
        "min": float(grid.values.min()),
        "max": float(grid.values.max()),
    }
    return [path, write_json(path.with_suffix(".json"), meta)]


def read_wigner(path: str | Path) -> WignerGrid:
    header, rows = _read_rows(path)
    meta_path = Path(path).with_suffix(".json")
    meta = read_json(meta_path) if meta_path.is_file() else {}
    values = np.array([[float(v) for v in r[1:]] for r in rows])
    return WignerGrid(
        x=np.array([float(v) for v in header[1:]]),
        p=np.array([float(r[0]) for r in rows]),
        values=values,
        descriptor=meta.get("descriptor", ""),
    )


# ---------------------------------------------------------------------------
# HHG
# ---------------------------------------------------------------------------


def write_dipole(dipole: DipoleSeries, path: str | Path) -> Path:
    return write_rows(path, ["t_au", "d_au"], zip(map(float, dipole.t), map(float, dipole.d)))


def write_spectrum(shifts: HarmonicShiftSet, path: str | Path) -> Path:
    """(q, |χ_q|², arg χ_q) triples."""
    rows = ((int(q), float(abs(c) ** 2), float(np.angle(c))) for q, c in zip(shifts.orders, shifts.chi))
    return write_rows(path, ["q", "power", "phase"], rows)


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

_STATE_KINDS: dict[str, type] = {
    "multimode": EntangledMultimodeState,
    "superposition": CoherentSuperposition,
    "fock": FockVector,
    "density": DensityMatrix,
}


def write_state(
    state: EntangledMultimodeState | CoherentSuperposition | FockVector | DensityMatrix,
    path: str | Path,
) -> Path:
    """Write a state as JSON tagged with its kind; complex arrays are stored as re/im lists."""
    kind = next(k for k, cls in _STATE_KINDS.items() if isinstance(state, cls))
    doc = {"kind": kind, **state.model_dump(mode="json")}
    return write_json(path, doc)


def read_state(path: str | Path) -> EntangledMultimodeState | CoherentSuperposition | FockVector | DensityMatrix:
    """
    Read a state written by write_state.

    Raises:
        MissingInputError: If the file does not exist.
        ValidationError: If the document is not a recognised state.
    """
    doc = read_json(path)
    if not isinstance(doc, dict) or doc.get("kind") not in _STATE_KINDS:
        raise ValidationError(f"{path}: 'kind' must be one of {sorted(_STATE_KINDS)}")
    cls = _STATE_KINDS[doc.pop("kind")]
    try:
        return cls.model_validate(doc)
    except pydantic.ValidationError as e:
        raise ValidationError(f"{path}: invalid {cls.__name__}: {e.errors()[0]['msg']}") from e


def write_density_matrix(rho: DensityMatrix, path: str | Path) -> Path:
    return write_state(rho, path)


def read_density_matrix(path: str | Path) -> DensityMatrix:
    state = read_state(path)
    if isinstance(state, FockVector):
        return DensityMatrix.from_vector(state)
    if not isinstance(state, DensityMatrix):
        raise ValidationError(f"{path} does not hold a Fock-basis state")
    return state


# ---------------------------------------------------------------------------
# Homodyne traces
# ---------------------------------------------------------------------------


def write_trace(trace: HomodyneTrace, path: str | Path) -> list[Path]:
    """CSV of (phi, x) rows, phase-major, plus a JSON sidecar with seed, shots and provenance."""
    path = Path(path)
    rows = ((float(phi), float(x)) for phi, xs in trace.entries for x in xs)
    write_rows(path, ["phi", "x"], rows)
    sidecar = {
        "seed": trace.seed,
        "shots": [int(s.size) for s in trace.samples],
        "phases": trace.phases.tolist(),
        "provenance": trace.provenance,
    }
    return [path, write_json(path.with_suffix(".json"), sidecar)]


def read_trace(path: str | Path) -> HomodyneTrace:
    """
    Read a trace CSV; samples are grouped by phase in order of first appearance.

    Raises:
        MissingInputError: If the CSV does not exist.
        ValidationError: If the columns are not (phi, x).
    """
    header, rows = _read_rows(path)
    if [h.strip() for h in header[:2]] != ["phi", "x"]:
        raise ValidationError(f"{path}: expected columns (phi, x), got {header}")
    groups: dict[float, list[float]] = {}
    try:
        for r in rows:
            groups.setdefault(float(r[0]), []).append(float(r[1]))
    except (ValueError, IndexError) as e:
        raise ValidationError(f"{path}: malformed row: {e}") from e
    sidecar_path = Path(path).with_suffix(".json")
    sidecar = read_json(sidecar_path) if sidecar_path.is_file() else {}
    logger.info(f"Read {sum(map(len, groups.values()))} samples over {len(groups)} phases from {path}")
    return HomodyneTrace(
        phases=np.array(list(groups)),
        samples=tuple(np.array(v) for v in groups.values()),
        seed=sidecar.get("seed"),
        provenance=sidecar.get("provenance", {}),
    )


# ---------------------------------------------------------------------------
# Quantum spectrometer
# ---------------------------------------------------------------------------


def write_shots(shots: ShotTable, selected: np.ndarray, path: str | Path) -> Path:
    """(s_ir, s_hh, selected, truth) rows."""
    rows = (
        (float(a), float(b), int(s), "hhg" if h else "background")
        for a, b, s, h in zip(shots.s_ir, shots.s_hh, selected, shots.is_hhg)
    )
    return write_rows(path, ["s_ir", "s_hh", "selected", "truth"], rows)


def write_pir(hist: PirHistogram, path: str | Path) -> Path:
    rows = (
        (float(lo), float(hi), float(c), float(p))
        for lo, hi, c, p in zip(hist.edges[:-1], hist.edges[1:], hist.centers, hist.probabilities)
    )
    return write_rows(path, ["loss_lo", "loss_hi", "loss", "probability"], rows)


# ---------------------------------------------------------------------------
# Run manifest
# ---------------------------------------------------------------------------


def module_versions() -> dict[str, str]:
    return {"strongcat": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "pydantic": pydantic.VERSION}


def echo_config(cfg: RunConfig, out_dir: str | Path) -> Path:
    """Write the effective configuration; it can be passed back with --config."""
    return write_json(Path(out_dir) / CONFIG_ECHO_NAME, cfg.model_dump(mode="json", by_alias=True))


def write_manifest(
    out_dir: str | Path,
    command: str,
    cfg: RunConfig,
    files: Sequence[str | Path],
    seconds: float,
    summary: dict[str, Any] | None = None,
) -> Path:
    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "versions": module_versions(),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "wall_clock_seconds": round(seconds, 6),
        "files": sorted(str(Path(f).relative_to(out_dir)) if Path(f).is_relative_to(out_dir) else str(f) for f in files),
        "summary": summary or {},
    }
    path = write_json(out_dir / MANIFEST_NAME, manifest)
    logger.info(f"Wrote manifest {path} ({len(files)} files, {seconds:.2f}s)")
    return path
