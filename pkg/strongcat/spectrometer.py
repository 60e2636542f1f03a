"""
Quantum-spectrometer simulation for strongcat.

Shots are drawn from a two-population model: correlated HHG shots, where every
harmonic photon of order q removes q photons from the IR signal, and an isotropic
background cloud centred on the correlated centroid. The anticorrelation diagonal
is estimated by total least squares on the whole cloud, shots near it are kept,
and the IR photon loss of the kept shots gives the conditioned P_IR.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.signal import find_peaks
from scipy.stats import pearsonr

from .errors import EmptySelectionError, NumericalError, ValidationError
from .schemas import AnticorrelationLine, PirHistogram, QsModel, ShotTable

logger = logging.getLogger(__name__)

MIN_SHOTS = 1000
CHUNK_SHOTS = 8192
MAD_SCALE = 1.4826
MIN_WIDTH = 1e-9


class QuantumSpectrometer:
    """
    Seeded shot generator.

    Attributes:
        model: Generative model of the shot cloud
        threads: Worker threads for chunked generation
    """

    def __init__(self, model: QsModel | None = None, threads: int = 1):
        """
        Initialize QuantumSpectrometer.

        Args:
            model: QsModel instance. If None, defaults are used.
            threads: Number of worker threads (>= 1).
        """
        if threads < 1:
            raise ValidationError("threads must be positive")
        self.model = model or QsModel()
        self.threads = threads
        logger.info(
            f"QuantumSpectrometer initialized (shots={self.model.shots}, q_eff={self.model.q_eff:.3f}, "
            f"hhg_fraction={self.model.hhg_fraction}, discrete={self.model.discrete})"
        )

    def _centroid(self) -> tuple[float, float]:
        m = self.model
        c_ir = m.ir_mean_photons - m.q_eff * m.hh_mean_photons
        if c_ir <= 0:
            raise ValidationError(
                f"ir_mean_photons ({m.ir_mean_photons}) must exceed the mean absorbed IR photons "
                f"({m.q_eff * m.hh_mean_photons:.3f})"
            )
        return m.hh_mean_photons, c_ir

    def _chunk(self, index: int, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Raw (hh, ir, label) photon signals of one chunk; every chunk owns its RNG substream."""
        m = self.model
        rng = np.random.default_rng(np.random.SeedSequence([m.seed, index]))
        is_hhg = rng.random(n) < m.hhg_fraction

        if m.discrete:
            k = rng.poisson(m.hh_mean_photons, n)
            orders = rng.choice(np.asarray(m.q_orders, dtype=float), size=int(k.sum()), p=m.weights)
            loss = np.bincount(np.repeat(np.arange(n), k), weights=orders, minlength=n)
        else:
            k = rng.gamma(shape=m.hh_mean_photons, scale=1.0, size=n)
            loss = m.q_eff * k
        k = k.astype(float)
        hh = k * (1.0 + m.noise_hh * rng.standard_normal(n))
        ir = m.ir_mean_photons - loss + m.noise_ir * m.ir_mean_photons * rng.standard_normal(n)

        c_hh, c_ir = self._centroid()
        bg_hh = c_hh * (1.0 + m.background_spread * rng.standard_normal(n))
        bg_ir = c_ir * (1.0 + m.background_spread * rng.standard_normal(n))

        hh = np.clip(np.where(is_hhg, hh, bg_hh), 0.0, None)
        ir = np.clip(np.where(is_hhg, ir, bg_ir), 0.0, None)
        return hh, ir, is_hhg

    def simulate_shots(self) -> ShotTable:
        """
        Generate the shot table, normalized so that both population means equal 1.

        Raises:
            ValidationError: If fewer than 10³ shots are requested or a mean signal vanishes.
        """
        m = self.model
        if m.shots < MIN_SHOTS:
            raise ValidationError(f"at least {MIN_SHOTS} shots are required, got {m.shots}")
        self._centroid()

        sizes = [min(CHUNK_SHOTS, m.shots - start) for start in range(0, m.shots, CHUNK_SHOTS)]
        if self.threads == 1:
            parts = [self._chunk(i, n) for i, n in enumerate(sizes)]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                parts = list(pool.map(self._chunk, range(len(sizes)), sizes))

        hh = np.concatenate([p[0] for p in parts])
        ir = np.concatenate([p[1] for p in parts])
        is_hhg = np.concatenate([p[2] for p in parts])
        hh_mean, ir_mean = float(hh.mean()), float(ir.mean())
        if hh_mean <= 0 or ir_mean <= 0:
            raise ValidationError("a mean photon signal vanished; cannot normalize")

        logger.info(
            f"Simulated {m.shots} shots in {len(sizes)} chunks "
            f"({int(is_hhg.sum())} correlated, seed={m.seed})"
        )
        return ShotTable(
            s_ir=ir / ir_mean,
            s_hh=hh / hh_mean,
            is_hhg=is_hhg,
            ir_mean_photons=ir_mean,
            hh_mean_photons=hh_mean,
        )


def simulate_shots(model: QsModel, threads: int = 1) -> ShotTable:
    return QuantumSpectrometer(model, threads=threads).simulate_shots()


def fit_anticorrelation_line(shots: ShotTable) -> AnticorrelationLine:
    """
    Total-least-squares line through all shots: the principal axis of their covariance.

    Raises:
        ValidationError: If fewer than two shots are given or the cloud is vertical.
    """
    if len(shots) < 2:
        raise ValidationError("at least two shots are needed to fit a line")
    pts = np.vstack([shots.s_hh, shots.s_ir])
    center = pts.mean(axis=1)
    _, vecs = np.linalg.eigh(np.cov(pts))
    d = vecs[:, -1]
    if abs(d[0]) < 1e-12:
        raise ValidationError("shot cloud has no extent along S_HH")
    if d[0] < 0:
        d = -d
    line = AnticorrelationLine(center_hh=float(center[0]), center_ir=float(center[1]),
                               dir_hh=float(d[0]), dir_ir=float(d[1]))
    logger.debug(f"Fitted anticorrelation line: slope={line.slope:.5f}, intercept={line.ir_at(0.0):.5f}")
    return line


def _signed_residuals(shots: ShotTable, line: AnticorrelationLine) -> np.ndarray:
    return (shots.s_hh - line.center_hh) * line.dir_ir - (shots.s_ir - line.center_ir) * line.dir_hh


def estimate_line_width(shots: ShotTable, line: AnticorrelationLine | None = None) -> float:
    """Robust 1σ width of the diagonal: scaled median absolute deviation of perpendicular residuals."""
    line = line or fit_anticorrelation_line(shots)
    r = _signed_residuals(shots, line)
    width = MAD_SCALE * float(np.median(np.abs(r - np.median(r))))
    return max(width, MIN_WIDTH)


def diagonal_mask(shots: ShotTable, width: float, line: AnticorrelationLine | None = None) -> np.ndarray:
    if width <= 0:
        raise ValidationError(f"width must be positive, got {width}")
    line = line or fit_anticorrelation_line(shots)
    return line.distance(shots.s_hh, shots.s_ir) <= width


def select_diagonal(shots: ShotTable, width: float, line: AnticorrelationLine | None = None) -> ShotTable:
    """
    Keep the shots within perpendicular distance `width` of the anticorrelation line.

    Raises:
        ValidationError: If width is not positive.
        EmptySelectionError: If no shot passes.
    """
    mask = diagonal_mask(shots, width, line)
    kept = int(mask.sum())
    if kept == 0:
        raise EmptySelectionError(f"no shot lies within {width:.4g} of the anticorrelation line")
    logger.info(f"Selected {kept}/{len(shots)} shots within {width:.4g} of the diagonal")
    return shots.subset(mask)


def pearson_r(shots: ShotTable) -> float:
    if len(shots) < 2:
        raise ValidationError("at least two shots are needed for a correlation")
    return float(pearsonr(shots.s_hh, shots.s_ir)[0])


def selection_precision(selected: ShotTable) -> float:
    """Fraction of the selected shots whose hidden label is a correlated HHG shot."""
    if len(selected) == 0:
        raise EmptySelectionError("empty selection has no precision")
    return float(np.mean(selected.is_hhg))


def conditioned_pir(
    selected: ShotTable,
    bins: float = 1.0,
    line: AnticorrelationLine | None = None,
    exclude_dark: bool = False,
) -> PirHistogram:
    """
    Histogram of the IR photon loss of the selected shots.

    The loss of a shot is its distance below the diagonal's S_HH = 0 intercept,
    converted back to photons with the IR normalization.

    Args:
        selected: Diagonal-selected shots.
        bins: Bin width in photons; bins are centred on integer multiples.
        line: Anticorrelation line; fitted on the selection when omitted.
        exclude_dark: Drop shots without any harmonic signal, so the zero-loss
            spike does not set the peak-prominence scale.
    """
    if exclude_dark:
        dark = selected.s_hh <= 0.0
        logger.debug(f"Excluding {int(dark.sum())} dark shots from P_IR")
        selected = selected.subset(~dark)
    if len(selected) < MIN_SHOTS:
        raise ValidationError(f"at least {MIN_SHOTS} selected shots are required, got {len(selected)}")
    if bins <= 0:
        raise ValidationError(f"bin width must be positive, got {bins}")
    line = line or fit_anticorrelation_line(selected)
    loss = (line.ir_at(0.0) - selected.s_ir) * selected.ir_mean_photons
    lo = np.floor(loss.min() / bins) - 0.5
    hi = np.ceil(loss.max() / bins) + 0.5
    edges = np.arange(lo, hi + 0.5, 1.0) * bins
    counts, _ = np.histogram(loss, bins=edges)
    return PirHistogram(edges=edges, probabilities=counts / counts.sum())


def peak_positions(hist: PirHistogram, prominence: float = 0.1) -> np.ndarray:
    """Centres of the P_IR peaks whose prominence exceeds a fraction of the maximum."""
    p = hist.probabilities
    idx, _ = find_peaks(p, prominence=prominence * p.max())
    return hist.centers[idx]


def peak_spacing(hist: PirHistogram, prominence: float = 0.05) -> float:
    """
    Spacing of the P_IR peak comb from the first peak of the histogram autocorrelation.

    Raises:
        NumericalError: If the autocorrelation shows no periodic peak.
    """
    p = hist.probabilities - hist.probabilities.mean()
    ac = np.correlate(p, p, mode="full")[p.size - 1:]
    idx, _ = find_peaks(ac, prominence=prominence * ac[0])
    if idx.size == 0:
        raise NumericalError("P_IR shows no periodic peak structure")
    lag = float(idx[0])
    i = int(idx[0])
    if 0 < i < ac.size - 1:
        denom = ac[i - 1] - 2.0 * ac[i] + ac[i + 1]
        if denom != 0:
            lag += 0.5 * (ac[i - 1] - ac[i + 1]) / denom
    width = float(hist.edges[1] - hist.edges[0])
    return lag * width
