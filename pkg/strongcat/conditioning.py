"""
Quantum-optical state synthesis and entanglement measures.

This module provides:
- The post-interaction multimode coherent product
- Conditioning on HHG (single and two-color) and the resulting IR / XUV cat states
- Partial projections of multimode states onto coherent states
- Linear and von Neumann entropies from branch Gram matrices

Reduced states of nonorthogonal branch superpositions are diagonalized in the branch
subspace (dimension = number of branches), never in a truncated Fock space.
"""

import logging
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateSuperpositionError, NullConditioningError, ValidationError
from .phase_space import MERGE_TOL, MIN_NORM2, AmplitudeLike, as_complex, coherent_overlap, normalize_css
from .schemas import (
    CoherentSuperposition,
    EntangledMultimodeState,
    HarmonicShiftSet,
    MultimodeBranch,
)

logger = logging.getLogger(__name__)

GRAM_BLOCK = 512


# ---------------------------------------------------------------------------
# Multimode algebra
# ---------------------------------------------------------------------------


def multimode_gram(alpha_rows: np.ndarray, other_rows: np.ndarray | None = None, modes: Sequence[int] | None = None) -> np.ndarray:
    """
    G_ij = Π_q ⟨α_q^{(i)}|β_q^{(j)}⟩ over the selected modes.

    Args:
        alpha_rows: Bra amplitudes, shape (n_i, n_modes).
        other_rows: Ket amplitudes, shape (n_j, n_modes); defaults to alpha_rows.
        modes: Mode positions to include; all modes if None.
    """
    a = np.atleast_2d(np.asarray(alpha_rows, dtype=complex))
    b = a if other_rows is None else np.atleast_2d(np.asarray(other_rows, dtype=complex))
    if modes is not None:
        idx = list(modes)
        a, b = a[:, idx], b[:, idx]
    if a.shape[1] == 0:
        return np.ones((a.shape[0], b.shape[0]), dtype=complex)
    log_g = (
        -0.5 * np.sum(np.abs(a) ** 2, axis=1)[:, None]
        - 0.5 * np.sum(np.abs(b) ** 2, axis=1)[None, :]
        + np.conj(a) @ b.T
    )
    return np.exp(log_g)


def merge_multimode(amplitudes: np.ndarray, alpha_rows: np.ndarray, tol: float = MERGE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Merge branches whose amplitudes agree on every mode to within tol (first occurrence kept)."""
    rows = np.atleast_2d(np.asarray(alpha_rows, dtype=complex))
    keys = np.round(np.concatenate([rows.real, rows.imag], axis=1) / tol).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    merged = np.zeros(order.size, dtype=complex)
    np.add.at(merged, rank[inverse.ravel()], np.asarray(amplitudes, dtype=complex))
    return merged, rows[first[order]]


def gram_apply(bra_rows: np.ndarray, ket_rows: np.ndarray, vecs: np.ndarray, modes: Sequence[int] | None = None) -> np.ndarray:
    """G @ vecs with G = multimode_gram(bra_rows, ket_rows), assembled in row blocks."""
    bra_rows = np.atleast_2d(bra_rows)
    out = np.empty((bra_rows.shape[0],) + np.shape(vecs)[1:], dtype=complex)
    for start in range(0, bra_rows.shape[0], GRAM_BLOCK):
        stop = start + GRAM_BLOCK
        out[start:stop] = multimode_gram(bra_rows[start:stop], ket_rows, modes=modes) @ vecs
    return out


def state_norm2(state: EntangledMultimodeState) -> float:
    c, a = merge_multimode(state.amplitudes, state.alpha_matrix)
    return float(np.real(np.conj(c) @ gram_apply(a, a, c)))


def state_overlap(bra: EntangledMultimodeState, ket: EntangledMultimodeState) -> complex:
    """⟨bra|ket⟩ of two states over the same modes."""
    if bra.mode_count != ket.mode_count:
        raise ValidationError("states must have the same modes")
    return complex(np.conj(bra.amplitudes) @ gram_apply(bra.alpha_matrix, ket.alpha_matrix, ket.amplitudes))


def assemble_state(
    amplitudes: np.ndarray,
    alpha_rows: np.ndarray,
    orders: Sequence[float],
    weight: float,
    provenance: dict[str, str],
) -> EntangledMultimodeState:
    """
    Merge and normalize a branch list into an EntangledMultimodeState.

    The returned weight is `weight` times the squared norm removed by normalization.

    Raises:
        DegenerateSuperpositionError: If the squared norm is below 1e-12.
    """
    c, a = merge_multimode(amplitudes, alpha_rows)
    norm2 = float(np.real(np.conj(c) @ gram_apply(a, a, c)))
    if norm2 < MIN_NORM2:
        raise DegenerateSuperpositionError(f"multimode superposition norm underflows (norm²={norm2:.3e})")
    c = c / np.sqrt(norm2)
    branches = tuple(MultimodeBranch(coeff=ci, alphas=ai) for ci, ai in zip(c, a))
    return EntangledMultimodeState(branches=branches, orders=tuple(float(o) for o in orders),
                                   weight=weight * norm2, provenance=provenance)


def normalize_state(state: EntangledMultimodeState) -> EntangledMultimodeState:
    """Merge coincident branches and rescale to unit norm (weight scales by the removed norm²)."""
    return assemble_state(state.amplitudes, state.alpha_matrix, state.orders, state.weight, dict(state.provenance))


# ---------------------------------------------------------------------------
# HHG conditioning
# ---------------------------------------------------------------------------


def post_hhg_product(alpha_L: AmplitudeLike, shifts: HarmonicShiftSet) -> MultimodeBranch:
    """Single branch |α_L + χ_1⟩ ⊗_{q≥2} |χ_q⟩ left by the interaction."""
    alphas = np.array(shifts.chi, dtype=complex)
    alphas[0] += as_complex(alpha_L)
    return MultimodeBranch(coeff=1.0, alphas=alphas)


def _vacuum_row(alpha_L: complex, n_modes: int) -> np.ndarray:
    row = np.zeros(n_modes, dtype=complex)
    row[0] = alpha_L
    return row


def no_harmonic_probability(product: MultimodeBranch, alpha_L: AmplitudeLike) -> float:
    """|⟨α_L, 0̃|Φ⟩|², the probability that no excitation is found."""
    vac = _vacuum_row(as_complex(alpha_L), product.mode_count)
    overlap = multimode_gram(vac, product.alphas)[0, 0] * product.amplitude
    return float(abs(overlap) ** 2)


def condition_on_hhg(
    product: MultimodeBranch,
    alpha_L: AmplitudeLike,
    orders: Sequence[float] | None = None,
) -> EntangledMultimodeState:
    """
    Apply 1 − |α_L, 0̃⟩⟨α_L, 0̃| to the post-interaction product.

    The result has the branches [1]·|α_L+χ_1⟩⊗|χ_q⟩ and [−ξ_1Πξ_q]·|α_L⟩⊗|0⟩;
    its weight is the probability 1 − |ξ_1Πξ_q|² of the HHG outcome.

    Raises:
        NullConditioningError: If every shift vanishes.
    """
    a_l = as_complex(alpha_L)
    vac = _vacuum_row(a_l, product.mode_count)
    if np.max(np.abs(product.alphas - vac)) < MERGE_TOL:
        logger.error("Conditioning on HHG without any generated shift")
        raise NullConditioningError("all shifts vanish: no harmonic radiation is generated")
    xi_tot = multimode_gram(vac, product.alphas)[0, 0]
    amplitudes = np.array([product.amplitude, -xi_tot * product.amplitude])
    rows = np.vstack([product.alphas, vac])
    if orders is None:
        orders = tuple(float(q) for q in range(1, product.mode_count + 1))
    state = assemble_state(amplitudes, rows, orders, 1.0, {"conditioning": "hhg"})
    logger.debug(f"Conditioned on HHG: |xi_tot|={abs(xi_tot):.6f}, probability={state.weight:.6e}")
    return state


def project_modes(
    state: EntangledMultimodeState,
    keep: Sequence[int],
    onto: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Project every mode not in `keep` onto a coherent state.

    Args:
        state: Multimode state.
        keep: Mode positions left untouched.
        onto: Amplitudes (one per mode; entries of kept modes ignored) to project onto.
            Defaults to the first branch's amplitudes.

    Returns:
        (amplitudes, alpha rows restricted to kept modes), unnormalized.
    """
    keep = list(keep)
    rows = state.alpha_matrix
    ref = rows[0] if onto is None else np.asarray(onto, dtype=complex)
    traced = [m for m in range(state.mode_count) if m not in keep]
    factors = multimode_gram(ref[None, :], rows, modes=traced)[0]
    return state.amplitudes * factors, rows[:, keep]


def _single_mode_cat(state: EntangledMultimodeState, mode: int, label: str) -> CoherentSuperposition:
    amps, rows = project_modes(state, [mode])
    if np.max(np.abs(rows[:, 0] - rows[0, 0])) < MERGE_TOL:
        raise DegenerateSuperpositionError(f"{label}: branches coincide on the selected mode, no superposition")
    return normalize_css(CoherentSuperposition(coeffs=amps, alphas=rows[:, 0], label=label))


def ir_cat(state: EntangledMultimodeState) -> CoherentSuperposition:
    """
    Fundamental-mode state after projecting the harmonics onto ⊗_q|χ_q⟩.

    Yields |α_L+χ_1⟩ − ξ_1|ξ_HH|²|α_L⟩, normalized.
    """
    return _single_mode_cat(state, 0, "ir-cat")


def xuv_cat(state: EntangledMultimodeState, q: int) -> CoherentSuperposition:
    """
    Harmonic-q state after projecting every other mode onto its HHG-branch amplitude.

    Yields |χ_q⟩ − ξ_q|ξ̄(q)|²|0⟩, normalized.

    Raises:
        ValidationError: If q is not a harmonic mode of the state.
        DegenerateSuperpositionError: If χ_q = 0.
    """
    if q < 2 or q > state.mode_count:
        raise ValidationError(f"q must satisfy 2 <= q <= {state.mode_count}")
    return _single_mode_cat(state, state.mode_index(float(q)), f"xuv-cat(q={q})")


def two_color_condition(
    a1: AmplitudeLike,
    a2: AmplitudeLike,
    chi_w1: AmplitudeLike,
    chi_w2: AmplitudeLike,
    chi_q: Iterable[complex] = (),
    omega_ratio: float = 2.0,
) -> EntangledMultimodeState:
    """
    Two-color conditioning on HHG over the two driver modes.

    |α_1+χ_1⟩|α_2+χ_2⟩ − ξ_(ω1,ω2)|α_1⟩|α_2⟩ with
    ξ_(ω1,ω2) = ⟨α_1|α_1+χ_1⟩⟨α_2|α_2+χ_2⟩·Π_q|⟨0|χ_q⟩|².

    Raises:
        NullConditioningError: If the conditioned state has zero norm.
    """
    z1, z2, x1, x2 = (as_complex(v) for v in (a1, a2, chi_w1, chi_w2))
    harm = float(np.prod([abs(coherent_overlap(0.0, c)) ** 2 for c in chi_q]))
    xi = coherent_overlap(z1, z1 + x1) * coherent_overlap(z2, z2 + x2) * harm
    rows = np.array([[z1 + x1, z2 + x2], [z1, z2]])
    try:
        return assemble_state(np.array([1.0, -xi]), rows, (1.0, omega_ratio), 1.0, {"conditioning": "two-color"})
    except DegenerateSuperpositionError as e:
        raise NullConditioningError("two-color conditioning annihilates the state") from e


# ---------------------------------------------------------------------------
# Entanglement
# ---------------------------------------------------------------------------


def _psd_sqrt(g: np.ndarray) -> np.ndarray:
    g = 0.5 * (g + g.conj().T)
    w, v = np.linalg.eigh(g)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def reduced_eigenvalues(state: EntangledMultimodeState, partition: Sequence[int]) -> np.ndarray:
    """
    Nonzero spectrum of the reduced state of the modes in `partition`.

    For |ψ⟩ = Σ_i c_i|A_i⟩|B_i⟩, ρ_A = Σ_ij X_ij|A_i⟩⟨A_j| with X_ij = c_i c_j*⟨B_j|B_i⟩; its
    nonzero eigenvalues are those of G_A^{1/2} X G_A^{1/2}.
    """
    part = sorted(set(int(m) for m in partition))
    if any(m < 0 or m >= state.mode_count for m in part):
        raise ValidationError("partition refers to a mode outside the state")
    rest = [m for m in range(state.mode_count) if m not in part]
    if not part or not rest:
        return np.array([1.0])
    c, rows = merge_multimode(state.amplitudes, state.alpha_matrix)
    g_a = multimode_gram(rows, modes=part)
    g_b = multimode_gram(rows, modes=rest)
    norm2 = float(np.real(np.conj(c) @ (g_a * g_b) @ c))
    if norm2 < MIN_NORM2:
        raise DegenerateSuperpositionError("cannot reduce a state with vanishing norm")
    x = np.outer(c, np.conj(c)) * g_b.T / norm2
    s = _psd_sqrt(g_a)
    h = s @ x @ s
    lams = np.clip(np.linalg.eigvalsh(0.5 * (h + h.conj().T)), 0.0, None)
    return lams / lams.sum()


def linear_entropy(state: EntangledMultimodeState, partition: Sequence[int]) -> float:
    """S_lin = 1 − Tr ρ_A² of the reduced state of `partition`."""
    lams = reduced_eigenvalues(state, partition)
    return float(max(0.0, 1.0 - np.sum(lams**2)))


def entropy_bits(lams: np.ndarray) -> float:
    """−Σλ·log₂λ over the nonzero eigenvalues."""
    lams = lams[lams > 1e-15]
    return float(max(0.0, -np.sum(lams * np.log2(lams))))


def linear_entropy_sweep(
    alpha_L: AmplitudeLike,
    chi1_values: Sequence[complex],
    harmonic_chi: Sequence[complex],
    partition: Sequence[int] = (0,),
) -> list[tuple[float, float]]:
    """
    Linear entropy of the HHG-conditioned state as the fundamental shift varies.

    Args:
        alpha_L: Driving amplitude.
        chi1_values: Fundamental shifts χ_1 to scan.
        harmonic_chi: Fixed harmonic shifts χ_q for q = 2..n_c.
        partition: Mode positions of subsystem A (default: the fundamental).

    Returns:
        (|χ_1|, S_lin) pairs.
    """
    rows = []
    harm = np.asarray(list(harmonic_chi), dtype=complex)
    for chi1 in chi1_values:
        shifts = HarmonicShiftSet(chi=np.concatenate([[complex(chi1)], harm]))
        state = condition_on_hhg(post_hhg_product(alpha_L, shifts), alpha_L)
        rows.append((abs(complex(chi1)), linear_entropy(state, partition)))
    logger.info(f"Linear-entropy sweep over {len(rows)} shifts, max S_lin={max(s for _, s in rows):.4f}")
    return rows


def displacement_centroid(state: CoherentSuperposition, reference: AmplitudeLike = 0.0) -> complex:
    """⟨a⟩ − reference for a (normalized internally) coherent-state superposition."""
    norm = normalize_css(state)
    c, a = norm.coeffs, norm.alphas
    mod2 = np.abs(a) ** 2
    g = np.exp(-0.5 * (mod2[:, None] + mod2[None, :]) + np.conj(a)[:, None] * a[None, :])
    mean_a = np.conj(c) @ (g * a[None, :]) @ c
    return complex(mean_a - as_complex(reference))
