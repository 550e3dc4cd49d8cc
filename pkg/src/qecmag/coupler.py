"""Tunable-coupler physics behind the signal term.

All couplings are angular frequencies in MHz (rad/μs). The ZZ strength uses
the level-repulsion form

    δE11 = 2g′²/(α + Δ) + 2g′²/(α − Δ)

so its sign follows the sign of the anharmonicity passed in. The coupled
pair is (q0, q2).
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np

from qecmag.qstate import pauli_string

logger = logging.getLogger(__name__)

FLUX_QUANTUM = 2.067833848e-15  # Wb
SQUARE_MICRON = 1e-12  # m²


class HybridizationError(ValueError):
    """The coupler is too close to a resonance for the dispersive expressions."""


@dataclass(frozen=True, slots=True)
class CouplerParams:
    g_prime: float
    delta: float
    alpha: float
    g_s: float = 0.0
    dgs_dphi: float = 0.0
    area: float = 100.0
    # (γ↓, γ₀, γ↑) in 1/μs
    gamma_rates: tuple[float, float, float] = (0.0, 0.0, 0.0)
    ratio_threshold: float = 10.0

    def __post_init__(self) -> None:
        if self.g_prime < 0:
            raise ValueError(f"g_prime must be non-negative, got {self.g_prime}.")
        if self.area <= 0:
            raise ValueError(f"Coupler area must be positive, got {self.area}.")
        if len(self.gamma_rates) != 3 or min(self.gamma_rates) < 0:
            raise ValueError(f"gamma_rates must be three non-negative rates: {self.gamma_rates}.")
        if self.ratio_threshold <= 0:
            raise ValueError("ratio_threshold must be positive.")


@dataclass(frozen=True, slots=True)
class DressedAnalysis:
    """Dressed-state quantities; ``energies`` is ordered (lower, upper)."""

    eta: float
    energies: tuple[float, float]
    zz_correction: float
    dephasing_weight: float
    excitation_weight: float


def hybridization_margin(params: CouplerParams) -> float:
    """Smallest of ``|α ± Δ|`` in units of g′ (infinite when g′ = 0)."""
    if params.g_prime == 0:
        return math.inf
    closest = min(abs(params.alpha + params.delta), abs(params.alpha - params.delta))
    return closest / params.g_prime


def effective_zz(params: CouplerParams) -> float:
    """Dispersive ZZ strength of the coupled pair.

    Raises:
        HybridizationError: If ``|α ± Δ| <= ratio_threshold · g′``.
    """
    if params.g_prime == 0:
        return 0.0
    margin = hybridization_margin(params)
    if margin <= params.ratio_threshold:
        raise HybridizationError(
            f"|α ± Δ| is only {margin:.3g} g′ (threshold {params.ratio_threshold:g}); "
            "strong hybridization of |11⟩ with |02⟩/|20⟩."
        )
    coupling = 2.0 * params.g_prime**2
    return coupling / (params.alpha + params.delta) + coupling / (params.alpha - params.delta)


def resonant_ratio(params: CouplerParams) -> float:
    """ZZ strength at the configured Δ divided by its Δ = 0 value."""
    resonant = effective_zz(dataclasses.replace(params, delta=0.0))
    if resonant == 0:
        return 0.0
    return effective_zz(params) / resonant


def exact_dressed_energies(params: CouplerParams) -> tuple[float, float]:
    """Eigenvalues of ``(Δ/2)σz + g′σx``, lower first."""
    half_gap = math.hypot(params.delta / 2, params.g_prime)
    return (-half_gap, half_gap)


def dressed_states(params: CouplerParams) -> DressedAnalysis:
    """Dressed-state admixture and energies of the flip-flop pair.

    For Δ ≠ 0 the energies are the expansion ``∓(Δ/2)[1 + 2(g′/Δ)²]``,
    accurate to fourth order in g′/Δ. Δ = 0 falls back to the exact
    eigenvalues (η = 1, maximal mixing).
    """
    g, delta = params.g_prime, params.delta
    if delta == 0:
        energies = exact_dressed_energies(params)
        eta = 1.0 if g > 0 else 0.0
        zz_correction = 0.0
    else:
        if delta < 0:
            logger.warning("Negative detuning %.3g; using |Δ| for the dressed states", delta)
        delta = abs(delta)
        eta = g / (math.hypot(delta / 2, g) + delta / 2)
        shift = (delta / 2) * (1.0 + 2.0 * (g / delta) ** 2)
        energies = (-shift, shift)
        zz_correction = g**2 / delta
    return DressedAnalysis(
        eta=eta,
        energies=energies,
        zz_correction=zz_correction,
        dephasing_weight=eta**2,
        excitation_weight=eta**4,
    )


def induced_dephasing_rate(
    analysis: DressedAnalysis, gamma_rates: tuple[float, float, float]
) -> tuple[float, float]:
    """Return ``(η²γ₀, η⁴γ↑)`` for rates ``(γ↓, γ₀, γ↑)``."""
    if min(gamma_rates) < 0:
        raise ValueError(f"Rates must be non-negative, got {gamma_rates}.")
    _, gamma_0, gamma_up = gamma_rates
    return analysis.dephasing_weight * gamma_0, analysis.excitation_weight * gamma_up


def signal_hamiltonian(params: CouplerParams, include_correction: bool = False) -> np.ndarray:
    """``g_s Z0Z2`` on the 4-qubit register, plus ``(g′²/Δ)(Z0 − Z2)`` on request."""
    hamiltonian = params.g_s * pauli_string("ZIZI")
    if include_correction and params.delta != 0 and params.g_prime != 0:
        correction = params.g_prime**2 / params.delta
        hamiltonian = hamiltonian + correction * (pauli_string("ZIII") - pauli_string("IIZI"))
    return hamiltonian


def flux_responsivity(params: CouplerParams) -> float:
    """``|dg_s/dB| = |dg_s/dΦ| · A / Φ₀`` in angular MHz per tesla."""
    return abs(params.dgs_dphi) * params.area * SQUARE_MICRON / FLUX_QUANTUM
