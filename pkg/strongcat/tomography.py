"""
Balanced homodyne detection and state reconstruction for strongcat.

This module provides:
- Quadrature distributions P_φ(x) = ⟨x|e^{−iφn̂}ρe^{iφn̂}|x⟩ of Fock-basis density matrices
- Seeded homodyne sampling with optional detector loss
- Diluted iterative maximum-likelihood reconstruction of ρ
- Filtered back-projection (inverse Radon transform) of the Wigner function
- Uhlmann fidelity
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import gammaln

from .config import TomographySettings
from .errors import IllConditionedError, InsufficientPhasesError, NonConvergenceError, ValidationError
from .phase_space import fock_wavefunctions, required_truncation, wigner_fock_basis, wigner_grid
from .schemas import DensityMatrix, FockVector, GridSpec, HomodyneTrace, ReconstructionReport, WignerGrid

logger = logging.getLogger(__name__)

MIN_RADON_PHASES = 12
SAMPLING_POINTS = 4001
PROBABILITY_FLOOR = 1e-15
EPSILON_MAX = 1e3


def _elements(rho: DensityMatrix | FockVector | np.ndarray) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.elements
    if isinstance(rho, FockVector):
        return DensityMatrix.from_vector(rho).elements
    return np.asarray(rho, dtype=complex)


def quadrature_pdf(rho: DensityMatrix | FockVector | np.ndarray, phi: float, x):
    """
    P_φ(x) = Σ_nm ρ_nm e^{−iφ(n−m)} ψ_n(x) ψ_m(x), clipped at zero.

    Args:
        rho: State in the Fock basis.
        phi: Local-oscillator phase (rad).
        x: Quadrature value or array.
    """
    r = _elements(rho)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    n = np.arange(r.shape[0])
    v = np.exp(-1j * phi * n)[:, None] * fock_wavefunctions(r.shape[0], x_arr)
    pdf = np.clip(np.real(np.sum(v * (r @ np.conj(v)), axis=0)), 0.0, None)
    return float(pdf[0]) if np.ndim(x) == 0 else pdf


def apply_detector_loss(rho: DensityMatrix | FockVector, eta: float) -> DensityMatrix:
    """
    Pure-loss channel of transmissivity η, ρ → Σ_k E_k ρ E_k†.

    E_k = Σ_n √(C(n,k) η^{n−k} (1−η)^k) |n−k⟩⟨n|.
    """
    if not 0.0 < eta <= 1.0:
        raise ValidationError("eta must lie in (0, 1]")
    r = _elements(rho)
    if eta == 1.0:
        return DensityMatrix(elements=r)
    dim = r.shape[0]
    n = np.arange(dim)
    out = np.zeros_like(r)
    for k in range(dim):
        src = n[k:]
        log_b = 0.5 * (
            gammaln(src + 1.0) - gammaln(k + 1.0) - gammaln(src - k + 1.0)
            + (src - k) * np.log(eta) + k * np.log1p(-eta)
        )
        e_k = np.zeros((dim, dim))
        e_k[src - k, src] = np.exp(log_b)
        out += e_k @ r @ e_k.T
    return DensityMatrix(elements=out)


def bin_trace(trace: HomodyneTrace, bin_width: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Per-phase histograms on a common grid of edges.

    Returns:
        (edges, counts) with counts of shape (n_phases, n_bins).
    """
    if bin_width <= 0:
        raise ValidationError("bin_width must be positive")
    lo = min(float(s.min()) for s in trace.samples)
    hi = max(float(s.max()) for s in trace.samples)
    start = np.floor(lo / bin_width) * bin_width
    n_bins = max(1, int(np.ceil((hi - start) / bin_width + 1e-9)))
    if start + n_bins * bin_width <= hi:
        n_bins += 1
    edges = start + bin_width * np.arange(n_bins + 1)
    counts = np.array([np.histogram(s, bins=edges)[0] for s in trace.samples], dtype=float)
    return edges, counts


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def fidelity(r1: DensityMatrix, r2: DensityMatrix) -> float:
    """(Tr√(√ρ₁ ρ₂ √ρ₁))², clipped to [0, 1]."""
    if r1.n_trunc != r2.n_trunc:
        raise ValidationError("density matrices must share the truncation")
    s1 = _psd_sqrt(r1.elements)
    m = s1 @ r2.elements @ s1
    lams = np.clip(np.linalg.eigvalsh(0.5 * (m + m.conj().T)), 0.0, None)
    return float(np.clip(np.sum(np.sqrt(lams)) ** 2, 0.0, 1.0))


def wigner_from_rho(rho: DensityMatrix, spec: GridSpec, descriptor: str = "rho") -> WignerGrid:
    """Fock-basis Wigner function of ρ on a grid."""
    return wigner_grid(lambda b: wigner_fock_basis(rho, b), spec, descriptor)


def _ramp_kernel(u: np.ndarray, k_c: float) -> np.ndarray:
    # ∫_{−k_c}^{k_c} |k| e^{iku} dk
    out = np.full(u.shape, k_c**2)
    nz = np.abs(u) > 1e-9
    un = u[nz]
    out[nz] = 2.0 * ((np.cos(k_c * un) - 1.0) / un**2 + k_c * np.sin(k_c * un) / un)
    return out


def _fold_phases(trace: HomodyneTrace) -> list[tuple[float, np.ndarray]]:
    folded: dict[float, list[np.ndarray]] = {}
    for phi, samples in trace.entries:
        phi = float(np.mod(phi, 2.0 * np.pi))
        if phi >= np.pi:
            phi, samples = phi - np.pi, -samples
        key = round(phi, 12)
        folded.setdefault(key, []).append(samples)
    return sorted((k, np.concatenate(v)) for k, v in folded.items())


def _check_phase_coverage(phases: np.ndarray) -> None:
    folded = np.sort(np.unique(np.round(np.mod(phases, np.pi), 12)))
    gaps = np.diff(np.concatenate([folded, [folded[0] + np.pi]]))
    if folded.size < 2 or gaps.max() > 0.5 * np.pi + 1e-12:
        raise ValidationError("phases must cover the half circle [0, π) without gaps larger than π/2")


class HomodyneTomographer:
    """
    Homodyne sampler and reconstructor.

    Attributes:
        settings: Sampling and reconstruction settings
        threads: Worker threads for per-phase sampling
    """

    def __init__(self, settings: TomographySettings | None = None, threads: int = 1):
        """
        Initialize HomodyneTomographer.

        Args:
            settings: TomographySettings instance. If None, defaults are used.
            threads: Number of worker threads (>= 1).
        """
        if threads < 1:
            raise ValidationError("threads must be positive")
        self.settings = settings or TomographySettings()
        self.threads = threads
        logger.info(
            f"HomodyneTomographer initialized (phases={self.settings.n_phases}, "
            f"shots={self.settings.shots_per_phase}, bin={self.settings.bin_width}, eta={self.settings.eta})"
        )

    def default_phases(self) -> np.ndarray:
        return np.pi * np.arange(self.settings.n_phases) / self.settings.n_phases

    # -- sampling ---------------------------------------------------------

    def sample(
        self,
        rho: DensityMatrix | FockVector,
        phases: np.ndarray | None = None,
        shots_per_phase: int | None = None,
        seed: int = 0,
    ) -> HomodyneTrace:
        """
        Inverse-CDF homodyne sampling; phase j draws from the stream SeedSequence([seed, j]).

        Raises:
            ValidationError: If shots_per_phase < 1 or seed < 0.
        """
        phases = self.default_phases() if phases is None else np.asarray(phases, dtype=float)
        shots = self.settings.shots_per_phase if shots_per_phase is None else shots_per_phase
        if shots < 1:
            raise ValidationError("shots_per_phase must be at least 1")
        if seed < 0:
            raise ValidationError("seed must be non-negative")
        measured = DensityMatrix(elements=_elements(rho))
        if self.settings.eta < 1.0:
            measured = apply_detector_loss(measured, self.settings.eta)
        half = np.sqrt(2.0 * measured.n_trunc + 1.0) + 6.0
        coarse = np.linspace(-half, half, SAMPLING_POINTS)

        def draw(j: int) -> np.ndarray:
            phi = float(phases[j])
            pdf = quadrature_pdf(measured, phi, coarse)
            support = np.nonzero(pdf > 1e-14 * pdf.max())[0]
            lo = coarse[max(support[0] - 1, 0)]
            hi = coarse[min(support[-1] + 1, coarse.size - 1)]
            grid = np.linspace(lo, hi, SAMPLING_POINTS)
            cdf = cumulative_trapezoid(quadrature_pdf(measured, phi, grid), grid, initial=0.0)
            cdf /= cdf[-1]
            rng = np.random.default_rng(np.random.SeedSequence([seed, j]))
            return np.interp(rng.random(shots), cdf, grid)

        indices = list(range(phases.size))
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                samples = list(pool.map(draw, indices))
        else:
            samples = [draw(j) for j in indices]
        logger.info(f"Sampled {phases.size} phases x {shots} shots (seed={seed})")
        return HomodyneTrace(phases=phases, samples=tuple(samples), seed=seed,
                             provenance={"eta": f"{self.settings.eta:g}"})

    # -- maximum likelihood -----------------------------------------------

    def reconstruct(self, trace: HomodyneTrace, n_trunc: int | None = None) -> tuple[DensityMatrix, ReconstructionReport]:
        """
        Diluted maximum-likelihood estimate of ρ.

        Each step is ρ ← N[(1+εR)ρ(1+εR)] with R(ρ) = Σ_j (f_j/p_j)Π_j over binned projectors;
        ε is halved whenever the log-likelihood would decrease, so the likelihood history is
        non-decreasing.

        Raises:
            ValidationError: If the phases or sample count cannot constrain n_trunc levels.
            IllConditionedError: If a bin probability underflows again after merging.
            NonConvergenceError: If the stopping rule is not met within max_iter iterations.
        """
        s = self.settings
        if n_trunc is None:
            n_trunc = s.n_trunc or _truncation_from_trace(trace)
        _check_phase_coverage(trace.phases)
        if trace.total_samples < 10 * n_trunc**2:
            raise ValidationError(f"at least {10 * n_trunc**2} samples are needed for n_trunc={n_trunc}")

        edges, counts = bin_trace(trace, s.bin_width)
        try:
            return self._iterate(trace.phases, edges, counts, n_trunc, merged=0)
        except _BinUnderflow as e:
            logger.warning(f"Merging {e.bins.shape[0]} underflowing bins and restarting the iteration")
            merged = int(e.bins.shape[0])
            counts = _merge_bins(counts, e.bins)
        try:
            return self._iterate(trace.phases, edges, counts, n_trunc, merged=merged)
        except _BinUnderflow as e:
            logger.error("Bin probabilities underflow again after merging")
            raise IllConditionedError(f"bin probability underflow persists ({e.bins.shape[0]} bins)") from None

    def _iterate(
        self,
        phases: np.ndarray,
        edges: np.ndarray,
        counts: np.ndarray,
        n_trunc: int,
        merged: int,
    ) -> tuple[DensityMatrix, ReconstructionReport]:
        s = self.settings
        bw = s.bin_width
        centers = 0.5 * (edges[1:] + edges[:-1])
        psi = fock_wavefunctions(n_trunc, centers)
        n = np.arange(n_trunc)
        freq = counts / counts.sum(axis=1, keepdims=True) / counts.shape[0]
        phase_idx, bin_idx = np.nonzero(freq > 0)
        f = freq[phase_idx, bin_idx]
        u = np.exp(1j * np.outer(phases[phase_idx], n)) * psi[:, bin_idx].T

        def probabilities(rho: np.ndarray) -> np.ndarray:
            return bw * np.real(np.sum(np.conj(u) * (u @ rho.T), axis=1))

        def log_likelihood(p: np.ndarray) -> float:
            return float(np.sum(f * np.log(p)))

        rho = np.eye(n_trunc, dtype=complex) / n_trunc
        p = probabilities(rho)
        if np.any(p < PROBABILITY_FLOOR):
            raise _BinUnderflow(np.flatnonzero(p < PROBABILITY_FLOOR), phase_idx, bin_idx)
        ll = log_likelihood(p)
        history = [ll]
        eps = EPSILON_MAX
        eye = np.eye(n_trunc)
        for it in range(1, s.max_iter + 1):
            r_op = bw * (u.T * (f / p)) @ np.conj(u)
            while True:
                step = eye + eps * r_op
                trial = step @ rho @ step.conj().T
                trial = 0.5 * (trial + trial.conj().T)
                trial /= np.real(np.trace(trial))
                p_trial = probabilities(trial)
                if np.all(p_trial > 0):
                    ll_trial = log_likelihood(p_trial)
                    if ll_trial >= ll:
                        break
                eps *= 0.5
                if eps < 1e-12:
                    ll_trial, trial, p_trial = ll, rho, p
                    break
            change = abs(ll_trial - ll) / max(abs(ll), 1e-300)
            rho, p, ll = trial, p_trial, ll_trial
            history.append(ll)
            eps = min(2.0 * eps, EPSILON_MAX)
            logger.debug(f"MaxLik iteration {it}: logL={ll:.12f}, eps={eps:.3g}")
            if change < s.tol:
                dm = DensityMatrix(elements=rho)
                report = ReconstructionReport(
                    iterations=it,
                    converged=True,
                    log_likelihood=ll,
                    history=history,
                    merged_bins=merged,
                    mean_photon=float(np.real(np.sum(n * np.diag(rho)))),
                )
                logger.info(f"MaxLik converged after {it} iterations (logL={ll:.8f}, <n>={report.mean_photon:.4f})")
                return dm, report
        logger.error(f"MaxLik did not converge within {s.max_iter} iterations")
        raise NonConvergenceError(f"relative likelihood change still above {s.tol:g} after {s.max_iter} iterations")

    # -- back-projection --------------------------------------------------

    def inverse_radon(self, trace: HomodyneTrace, spec: GridSpec, cutoff: float | None = None) -> WignerGrid:
        """
        Filtered back-projection of the per-phase histograms with a hard ramp cutoff k_c.

        Phases in [π, 2π) are folded onto [0, π) with x → −x.

        Raises:
            InsufficientPhasesError: If fewer than 12 distinct phases remain after folding.
        """
        k_c = self.settings.cutoff if cutoff is None else cutoff
        if k_c <= 0:
            raise ValidationError("cutoff must be positive")
        folded = _fold_phases(trace)
        if len(folded) < MIN_RADON_PHASES:
            raise InsufficientPhasesError(f"{len(folded)} distinct phases; at least {MIN_RADON_PHASES} are required")
        phis = np.array([phi for phi, _ in folded])
        gaps = np.diff(np.concatenate([phis, [phis[0] + np.pi]]))
        dphi = 0.5 * (gaps + np.roll(gaps, 1))

        bw = self.settings.bin_width
        folded_trace = HomodyneTrace(phases=phis, samples=tuple(s for _, s in folded))
        edges, counts = bin_trace(folded_trace, bw)
        centers = 0.5 * (edges[1:] + edges[:-1])
        probs = counts / counts.sum(axis=1, keepdims=True)

        beta = spec.beta()
        x_pts = np.sqrt(2.0) * beta.real
        p_pts = np.sqrt(2.0) * beta.imag
        reach = float(np.max(np.hypot(x_pts, p_pts)))
        s_lo = min(centers[0], -reach) - 1.0
        s_hi = max(centers[-1], reach) + 1.0
        s_grid = np.arange(s_lo, s_hi + 0.5 * bw, 0.5 * bw)
        kernel = _ramp_kernel(s_grid[:, None] - centers[None, :], k_c)

        w_tilde = np.zeros_like(x_pts)
        for phi, weight, prob in zip(phis, dphi, probs):
            filtered = kernel @ prob
            s0 = x_pts * np.cos(phi) + p_pts * np.sin(phi)
            w_tilde += weight * np.interp(s0, s_grid, filtered)
        values = 2.0 * w_tilde / (4.0 * np.pi**2)
        logger.info(f"Back-projected {len(folded)} phases onto a {spec.nx}x{spec.np_} grid (k_c={k_c})")
        return WignerGrid(x=spec.x, p=spec.p, values=values, descriptor="inverse-radon")


class _BinUnderflow(Exception):
    def __init__(self, which: np.ndarray, phase_idx: np.ndarray, bin_idx: np.ndarray):
        super().__init__("bin probability underflow")
        self.bins = np.column_stack([phase_idx[which], bin_idx[which]])


def _merge_bins(counts: np.ndarray, bins: np.ndarray) -> np.ndarray:
    """Move the counts of each underflowing bin into its neighbour toward the histogram centre."""
    out = counts.copy()
    mid = out.shape[1] // 2
    for phase, b in bins:
        target = b + 1 if b < mid else b - 1
        target = int(np.clip(target, 0, out.shape[1] - 1))
        out[phase, target] += out[phase, b]
        out[phase, b] = 0.0
    return out


def _truncation_from_trace(trace: HomodyneTrace) -> int:
    # ⟨x_φ²⟩ averaged over uniformly spread phases equals ⟨n⟩ + 1/2
    second = float(np.mean([np.mean(s**2) for s in trace.samples]))
    return required_truncation(np.sqrt(max(second - 0.5, 0.0)))


def sample_homodyne(
    rho: DensityMatrix | FockVector,
    phases: np.ndarray,
    shots_per_phase: int,
    seed: int,
    eta: float = 1.0,
    threads: int = 1,
) -> HomodyneTrace:
    """Convenience wrapper around HomodyneTomographer.sample."""
    settings = TomographySettings(eta=eta, shots_per_phase=shots_per_phase, n_phases=len(phases))
    return HomodyneTomographer(settings, threads=threads).sample(rho, phases, shots_per_phase, seed)


def maxlik_reconstruct(
    trace: HomodyneTrace,
    n_trunc: int,
    max_iter: int = 2000,
    tol: float = 1e-8,
    bin_width: float = 0.05,
) -> tuple[DensityMatrix, ReconstructionReport]:
    """Convenience wrapper around HomodyneTomographer.reconstruct."""
    settings = TomographySettings(max_iter=max_iter, tol=tol, bin_width=bin_width, n_trunc=n_trunc)
    return HomodyneTomographer(settings).reconstruct(trace, n_trunc)


def inverse_radon(trace: HomodyneTrace, spec: GridSpec, cutoff: float = 4.0, bin_width: float = 0.05) -> WignerGrid:
    """Convenience wrapper around HomodyneTomographer.inverse_radon."""
    return HomodyneTomographer(TomographySettings(cutoff=cutoff, bin_width=bin_width)).inverse_radon(trace, spec, cutoff)
