"""
Single-mode phase-space kernel.

This module provides pure functions for:
- Coherent, Fock, squeezed and coherent-superposition states
- Overlaps, Gram matrices and the displacement composition rule
- Photon statistics (distribution, ⟨n⟩, g²(0), Mandel Q)
- Closed-form Wigner functions and the Fock-basis Wigner oracle

Quadratures follow x = (a + a†)/√2 (vacuum Δx = Δp = 1/√2); Wigner values use the
2/π peak convention over β = (x + ip)/√2.
"""

import logging
from typing import Callable

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_laguerre, gammaln

from .errors import (
    DegenerateSuperpositionError,
    TruncationTooSmallError,
    ValidationError,
    ZeroMeanPhotonError,
)
from .schemas import (
    CoherentAmplitude,
    CoherentSuperposition,
    DensityMatrix,
    FockVector,
    GridSpec,
    SqueezeParams,
    WignerGrid,
)

logger = logging.getLogger(__name__)

MAX_LEAKAGE = 1e-8
MERGE_TOL = 1e-8
MIN_NORM2 = 1e-12

AmplitudeLike = CoherentAmplitude | complex | float


def as_complex(a: AmplitudeLike) -> complex:
    return a.value if isinstance(a, CoherentAmplitude) else complex(a)


def _as_beta(beta) -> np.ndarray | complex:
    if isinstance(beta, CoherentAmplitude):
        return beta.value
    return np.asarray(beta, dtype=complex) if np.ndim(beta) else complex(beta)


def _scalar_or_array(values: np.ndarray):
    return float(values) if np.ndim(values) == 0 else values


def required_truncation(a: AmplitudeLike) -> int:
    """Default Fock truncation ⌈|α|² + 8|α| + 20⌉ for coherent-dominated states."""
    r = abs(as_complex(a))
    return int(np.ceil(r**2 + 8.0 * r + 20.0))


def coherent_overlap(a1: AmplitudeLike, a2: AmplitudeLike) -> complex:
    """⟨α₁|α₂⟩ = exp(−(|α₁|² + |α₂|² − 2α₁*α₂)/2)."""
    z1, z2 = as_complex(a1), as_complex(a2)
    return complex(np.exp(-0.5 * (abs(z1) ** 2 + abs(z2) ** 2 - 2.0 * np.conj(z1) * z2)))


def displacement_compose(a: AmplitudeLike, b: AmplitudeLike) -> tuple[float, complex]:
    """
    Compose two displacements: D(a)D(b) = e^{i·phase}·D(a + b).

    Returns:
        (phase, a + b) with phase = Im(a·b*).
    """
    za, zb = as_complex(a), as_complex(b)
    return float(np.imag(za * np.conj(zb))), za + zb


def gram_matrix(alphas: np.ndarray) -> np.ndarray:
    """G_ij = ⟨α_i|α_j⟩ for a vector of amplitudes."""
    a = np.asarray(alphas, dtype=complex)
    mod2 = np.abs(a) ** 2
    return np.exp(-0.5 * (mod2[:, None] + mod2[None, :]) + np.conj(a)[:, None] * a[None, :])


def merge_branches(coeffs: np.ndarray, alphas: np.ndarray, tol: float = MERGE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Merge branches whose amplitudes differ by less than tol, summing their coefficients."""
    merged_c: list[complex] = []
    merged_a: list[complex] = []
    for c, a in zip(np.asarray(coeffs, dtype=complex), np.asarray(alphas, dtype=complex)):
        for i, existing in enumerate(merged_a):
            if abs(existing - a) < tol:
                merged_c[i] += c
                break
        else:
            merged_c.append(complex(c))
            merged_a.append(complex(a))
    return np.array(merged_c), np.array(merged_a)


def css_norm2(state: CoherentSuperposition) -> float:
    """Squared norm c†Gc of a coherent-state superposition."""
    c, a = merge_branches(state.coeffs, state.alphas)
    return float(np.real(np.conj(c) @ gram_matrix(a) @ c))


def normalize_css(state: CoherentSuperposition) -> CoherentSuperposition:
    """
    Merge near-identical branches and rescale to unit norm.

    Raises:
        DegenerateSuperpositionError: If the squared norm is below 1e-12.
    """
    c, a = merge_branches(state.coeffs, state.alphas)
    norm2 = float(np.real(np.conj(c) @ gram_matrix(a) @ c))
    if norm2 < MIN_NORM2:
        raise DegenerateSuperpositionError(f"superposition norm underflows (norm²={norm2:.3e})")
    return CoherentSuperposition(coeffs=c / np.sqrt(norm2), alphas=a, label=state.label)


def shifted_cat(alpha: AmplitudeLike, chi: AmplitudeLike) -> CoherentSuperposition:
    """The shifted cat |α+χ⟩ − ⟨α|α+χ⟩|α⟩ (unnormalized)."""
    a, x = as_complex(alpha), as_complex(chi)
    xi = coherent_overlap(a, a + x)
    return CoherentSuperposition(coeffs=[1.0, -xi], alphas=[a + x, a], label=f"cat(alpha={a:.4g}, chi={x:.4g})")


def parity_cat(alpha: AmplitudeLike, parity: int = 1) -> CoherentSuperposition:
    """Even (parity=+1) or odd (parity=−1) cat |α⟩ ± |−α⟩ (unnormalized)."""
    if parity not in (1, -1):
        raise ValidationError("parity must be +1 or -1")
    a = as_complex(alpha)
    name = "even" if parity == 1 else "odd"
    return CoherentSuperposition(coeffs=[1.0, float(parity)], alphas=[a, -a], label=f"{name}-cat(alpha={a:.4g})")


# ---------------------------------------------------------------------------
# Fock expansions
# ---------------------------------------------------------------------------


def coherent_fock_matrix(alphas: np.ndarray, n_trunc: int) -> np.ndarray:
    """Fock columns of many coherent states at once, shape (len(alphas), n_trunc)."""
    z = np.atleast_1d(np.asarray(alphas, dtype=complex))
    r = np.abs(z)
    n = np.arange(n_trunc)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_mod = -0.5 * r[:, None] ** 2 + n[None, :] * np.log(r)[:, None] - 0.5 * gammaln(n + 1.0)[None, :]
    log_mod[:, 0] = -0.5 * r**2
    return np.exp(log_mod) * np.exp(1j * np.outer(np.angle(z), n))


def _check_leakage(coeffs: np.ndarray, what: str, max_leakage: float) -> None:
    leak = float(np.abs(coeffs[-1]) ** 2)
    if leak >= max_leakage:
        logger.error(f"Truncation too small for {what}: |c_N-1|^2={leak:.3e}")
        raise TruncationTooSmallError(
            f"n_trunc={coeffs.size} leaks {leak:.3e} >= {max_leakage:g} for {what}; "
            f"increase the truncation"
        )


def coherent_fock_coeffs(a: AmplitudeLike, n_trunc: int, max_leakage: float = MAX_LEAKAGE) -> FockVector:
    """
    Fock expansion c_n = e^{−|α|²/2}αⁿ/√(n!) of a coherent state.

    Args:
        a: Coherent amplitude.
        n_trunc: Number of retained Fock levels (see required_truncation).
        max_leakage: Largest admissible |c_{n_trunc−1}|².

    Raises:
        ValidationError: If n_trunc is not positive.
        TruncationTooSmallError: If the last retained level is too populated.
    """
    if n_trunc < 1:
        raise ValidationError("n_trunc must be positive")
    coeffs = coherent_fock_matrix(as_complex(a), n_trunc)[0]
    _check_leakage(coeffs, f"alpha={as_complex(a):.4g}", max_leakage)
    return FockVector(coeffs=coeffs)


def fock_state(n: int, n_trunc: int) -> FockVector:
    if not 0 <= n < n_trunc:
        raise ValidationError("n must satisfy 0 <= n < n_trunc")
    coeffs = np.zeros(n_trunc, dtype=complex)
    coeffs[n] = 1.0
    return FockVector(coeffs=coeffs)


def css_fock_coeffs(state: CoherentSuperposition, n_trunc: int, max_leakage: float = MAX_LEAKAGE) -> FockVector:
    """Normalized Fock expansion of a coherent-state superposition."""
    c, a = merge_branches(state.coeffs, state.alphas)
    coeffs = c @ coherent_fock_matrix(a, n_trunc)
    norm = np.sqrt(np.sum(np.abs(coeffs) ** 2))
    if norm**2 < MIN_NORM2:
        raise DegenerateSuperpositionError("superposition has no weight inside the truncation")
    coeffs = coeffs / norm
    _check_leakage(coeffs, state.label or "superposition", max_leakage)
    return FockVector(coeffs=coeffs)


def squeezed_fock_coeffs(params: SqueezeParams, n_trunc: int, max_leakage: float = MAX_LEAKAGE) -> FockVector:
    """
    Fock expansion of D(α)S(k)|0⟩ with S(k) = exp[(k/2)(a² − a†²)].

    The squeezed vacuum is expanded analytically on an enlarged basis and displaced with
    the matrix exponential of the displacement generator before truncation.
    """
    alpha = params.alpha.value
    work = n_trunc + 40 + int(np.ceil(6.0 * abs(alpha) + 8.0 * abs(params.k) ** 2))
    sv = np.zeros(work, dtype=complex)
    t = np.tanh(params.k)
    amp = 1.0 / np.sqrt(np.cosh(params.k))
    for m in range(0, (work + 1) // 2):
        if m > 0:
            amp *= -t * np.sqrt((2 * m) * (2 * m - 1)) / (2 * m)
        sv[2 * m] = amp
    if alpha != 0:
        a_op = np.diag(np.sqrt(np.arange(1, work)), k=1).astype(complex)
        sv = expm(alpha * a_op.conj().T - np.conj(alpha) * a_op) @ sv
    coeffs = sv[:n_trunc] / np.sqrt(np.sum(np.abs(sv[:n_trunc]) ** 2))
    _check_leakage(coeffs, f"squeezed(k={params.k:.3g}, alpha={alpha:.4g})", max_leakage)
    return FockVector(coeffs=coeffs)


def fock_wavefunctions(n_max: int, x: np.ndarray) -> np.ndarray:
    """
    Quadrature wavefunctions ψ_0..ψ_{n_max−1}(x), shape (n_max, len(x)).

    Uses ψ_n = √(2/n)·x·ψ_{n−1} − √((n−1)/n)·ψ_{n−2}.
    """
    x = np.asarray(x, dtype=float)
    psi = np.zeros((n_max,) + x.shape)
    psi[0] = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if n_max > 1:
        psi[1] = np.sqrt(2.0) * x * psi[0]
    for n in range(2, n_max):
        psi[n] = np.sqrt(2.0 / n) * x * psi[n - 1] - np.sqrt((n - 1.0) / n) * psi[n - 2]
    return psi


# ---------------------------------------------------------------------------
# Photon statistics
# ---------------------------------------------------------------------------


def photon_distribution(state: FockVector | DensityMatrix) -> np.ndarray:
    """P_n = |⟨n|ψ⟩|² or ρ_nn."""
    if isinstance(state, FockVector):
        return np.abs(state.coeffs) ** 2
    return np.clip(np.real(np.diag(state.elements)), 0.0, None)


def mean_photon(rho: FockVector | DensityMatrix) -> float:
    """⟨n⟩ = Σ n ρ_nn."""
    pops = photon_distribution(rho)
    return float(np.dot(np.arange(pops.size), pops) / pops.sum())


def _factorial_moments(state: FockVector | DensityMatrix) -> tuple[float, float]:
    pops = photon_distribution(state)
    pops = pops / pops.sum()
    n = np.arange(pops.size)
    return float(np.dot(n, pops)), float(np.dot(n * (n - 1.0), pops))


def g2_zero(state: FockVector | DensityMatrix) -> float:
    """
    Normalized second-order coherence (⟨n²⟩ − ⟨n⟩)/⟨n⟩².

    Raises:
        ZeroMeanPhotonError: For states with ⟨n⟩ = 0.
    """
    mean, second = _factorial_moments(state)
    if mean < 1e-14:
        raise ZeroMeanPhotonError("g2(0) is undefined for a state with zero mean photon number")
    return second / mean**2


def mandel_q(state: FockVector | DensityMatrix) -> float:
    """Mandel Q = (⟨Δn²⟩ − ⟨n⟩)/⟨n⟩; negative for sub-Poissonian light."""
    mean, second = _factorial_moments(state)
    if mean < 1e-14:
        raise ZeroMeanPhotonError("Mandel Q is undefined for a state with zero mean photon number")
    return (second - mean**2) / mean


# ---------------------------------------------------------------------------
# Wigner functions
# ---------------------------------------------------------------------------


def wigner_coherent(alpha: AmplitudeLike, beta):
    """W(β) = (2/π)·exp(−2|β − α|²)."""
    b = _as_beta(beta)
    return _scalar_or_array(2.0 / np.pi * np.exp(-2.0 * np.abs(b - as_complex(alpha)) ** 2))


def wigner_fock(n: int, beta):
    """W(β) = (2/π)(−1)ⁿ e^{−2|β|²} L_n(4|β|²)."""
    if n < 0:
        raise ValidationError("n must be non-negative")
    r2 = np.abs(_as_beta(beta)) ** 2
    return _scalar_or_array(2.0 / np.pi * (-1.0) ** n * np.exp(-2.0 * r2) * eval_laguerre(n, 4.0 * r2))


def wigner_squeezed(params: SqueezeParams, beta):
    """Anisotropic Gaussian with variances e^{−2k}/4 (Re β) and e^{2k}/4 (Im β), centred at α."""
    d = _as_beta(beta) - params.alpha.value
    e = np.exp(2.0 * params.k)
    return _scalar_or_array(2.0 / np.pi * np.exp(-2.0 * e * np.real(d) ** 2 - 2.0 / e * np.imag(d) ** 2))


def wigner_css(state: CoherentSuperposition, beta):
    """
    Wigner function of a coherent-state superposition.

    Sums W_{|α_i⟩⟨α_j|}(β) = (2/π)⟨α_j|α_i⟩·exp[−2(β* − α_j*)(β − α_i)] over all branch pairs.

    Raises:
        DegenerateSuperpositionError: If the state norm underflows.
    """
    norm = normalize_css(state)
    b = _as_beta(beta)
    total = np.zeros(np.shape(b), dtype=complex)
    for ci, ai in zip(norm.coeffs, norm.alphas):
        for cj, aj in zip(norm.coeffs, norm.alphas):
            exponent = (
                -0.5 * abs(ai) ** 2 - 0.5 * abs(aj) ** 2 - np.conj(aj) * ai
                - 2.0 * np.abs(b) ** 2 + 2.0 * np.conj(b) * ai + 2.0 * np.conj(aj) * b
            )
            total = total + ci * np.conj(cj) * np.exp(exponent)
    return _scalar_or_array(2.0 / np.pi * np.real(total))


def wigner_fock_basis(rho: DensityMatrix | np.ndarray, beta):
    """
    Fock-basis Wigner oracle W(β) = Σ_nm ρ_nm W_{|n⟩⟨m|}(β).

    Matrix-element Wigner functions are generated by three-term recurrences in n and m,
    which stay stable to n ≈ 100.
    """
    r = rho.elements if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    b = np.atleast_1d(_as_beta(beta))
    shape = b.shape
    b = b.ravel()
    dim = r.shape[0]
    wl = [np.zeros_like(b) for _ in range(dim)]
    wl[0] = 2.0 / np.pi * np.exp(-2.0 * np.abs(b) ** 2).astype(complex)
    w = np.real(r[0, 0]) * np.real(wl[0])
    for n in range(1, dim):
        wl[n] = 2.0 * b * wl[n - 1] / np.sqrt(n)
        w += 2.0 * np.real(r[0, n] * wl[n])
    for m in range(1, dim):
        temp = wl[m].copy()
        wl[m] = (2.0 * np.conj(b) * temp - np.sqrt(m) * wl[m - 1]) / np.sqrt(m)
        w += np.real(r[m, m] * wl[m])
        for n in range(m + 1, dim):
            temp2 = (2.0 * b * wl[n - 1] - np.sqrt(m) * temp) / np.sqrt(n)
            temp = wl[n].copy()
            wl[n] = temp2
            w += 2.0 * np.real(r[m, n] * wl[n])
    w = w.reshape(shape)
    return float(w[0]) if np.ndim(_as_beta(beta)) == 0 else w


def wigner_grid(func: Callable[[np.ndarray], np.ndarray], spec: GridSpec, descriptor: str = "") -> WignerGrid:
    """Evaluate a Wigner function of β on a grid."""
    values = np.asarray(func(spec.beta()), dtype=float)
    return WignerGrid(x=spec.x, p=spec.p, values=values, descriptor=descriptor)
