"""Tests for qecmag.coupler module."""

from __future__ import annotations

import math

import numpy as np
import pytest

from qecmag.coupler import (
    FLUX_QUANTUM,
    CouplerParams,
    HybridizationError,
    dressed_states,
    effective_zz,
    exact_dressed_energies,
    flux_responsivity,
    hybridization_margin,
    induced_dephasing_rate,
    resonant_ratio,
    signal_hamiltonian,
)
from qecmag.qstate import pauli_string


def test_zz_at_zero_detuning():
    params = CouplerParams(g_prime=1.0, delta=0.0, alpha=-200.0)
    assert effective_zz(params) == pytest.approx(4.0 / -200.0)


def test_detuning_of_twice_the_anharmonicity_gives_minus_one_third():
    params = CouplerParams(g_prime=1.0, delta=-400.0, alpha=-200.0)
    assert resonant_ratio(params) == pytest.approx(-1 / 3)


def test_zero_coupling_gives_no_zz():
    params = CouplerParams(g_prime=0.0, delta=100.0, alpha=100.0)
    assert effective_zz(params) == 0.0
    assert hybridization_margin(params) == math.inf
    assert resonant_ratio(params) == 0.0


def test_near_resonance_raises():
    params = CouplerParams(g_prime=5.0, delta=195.0, alpha=200.0)
    assert hybridization_margin(params) == pytest.approx(1.0)
    with pytest.raises(HybridizationError, match="hybridization"):
        effective_zz(params)


def test_params_validation():
    with pytest.raises(ValueError):
        CouplerParams(g_prime=-1.0, delta=0.0, alpha=0.0)
    with pytest.raises(ValueError):
        CouplerParams(g_prime=1.0, delta=0.0, alpha=0.0, area=0.0)
    with pytest.raises(ValueError):
        CouplerParams(g_prime=1.0, delta=0.0, alpha=0.0, gamma_rates=(0.0, -1.0, 0.0))


# ---------------------------------------------------------------------------
# Dressed states
# ---------------------------------------------------------------------------


def test_dressed_energies_match_exact_diagonalization():
    params = CouplerParams(g_prime=1.0, delta=10.0, alpha=-200.0)
    analysis = dressed_states(params)
    exact = exact_dressed_energies(params)
    assert analysis.energies == pytest.approx(exact, rel=1e-3)
    assert analysis.energies[0] < 0 < analysis.energies[1]


def test_exact_energies_are_eigenvalues():
    params = CouplerParams(g_prime=0.7, delta=3.0, alpha=-200.0)
    hamiltonian = 0.5 * params.delta * pauli_string("Z") + params.g_prime * pauli_string("X")
    assert exact_dressed_energies(params) == pytest.approx(tuple(np.linalg.eigvalsh(hamiltonian)))


def test_resonant_pair_is_maximally_mixed():
    analysis = dressed_states(CouplerParams(g_prime=1.0, delta=0.0, alpha=-200.0))
    assert analysis.eta == 1.0
    assert analysis.energies == pytest.approx((-1.0, 1.0))


def test_admixture_is_small_when_detuned():
    analysis = dressed_states(CouplerParams(g_prime=1.0, delta=100.0, alpha=-200.0))
    assert analysis.eta == pytest.approx(0.01, rel=1e-3)
    assert analysis.zz_correction == pytest.approx(0.01)


def test_negative_detuning_warns(caplog):
    with caplog.at_level("WARNING"):
        dressed_states(CouplerParams(g_prime=1.0, delta=-10.0, alpha=-200.0))
    assert "Negative detuning" in caplog.text


def test_induced_dephasing_rates():
    analysis = dressed_states(CouplerParams(g_prime=1.0, delta=100.0, alpha=-200.0))
    dephasing, excitation = induced_dephasing_rate(analysis, (0.1, 0.2, 0.3))
    assert dephasing == pytest.approx(analysis.eta**2 * 0.2)
    assert excitation == pytest.approx(analysis.eta**4 * 0.3)


# ---------------------------------------------------------------------------
# Signal term
# ---------------------------------------------------------------------------


def test_signal_hamiltonian_is_zz_on_coupled_pair():
    params = CouplerParams(g_prime=1.0, delta=100.0, alpha=-200.0, g_s=0.3)
    assert np.allclose(signal_hamiltonian(params), 0.3 * pauli_string("ZIZI"))


def test_signal_hamiltonian_correction_terms():
    params = CouplerParams(g_prime=1.0, delta=100.0, alpha=-200.0, g_s=0.3)
    difference = signal_hamiltonian(params, include_correction=True) - signal_hamiltonian(params)
    assert np.allclose(difference, 0.01 * (pauli_string("ZIII") - pauli_string("IIZI")))


def test_flux_responsivity_headline_scale():
    params = CouplerParams(g_prime=0.0, delta=0.0, alpha=0.0, dgs_dphi=15.25, area=100.0)
    assert flux_responsivity(params) == pytest.approx(15.25 * 100e-12 / FLUX_QUANTUM)
