"""Tests for qecmag.channels module."""

from __future__ import annotations

import math

import numpy as np
import pytest

from qecmag.aqec4 import four_qubit_code
from qecmag.channels import (
    DampingParams,
    KrausChannel,
    amplitude_damping,
    apply,
    apply_depolarizing,
    compose,
    damping_channel,
    damping_operator,
    depolarizing,
    first_order_operators,
    identity_channel,
)
from qecmag.qstate import DensityMatrix, ket, random_density

# ---------------------------------------------------------------------------
# Amplitude damping
# ---------------------------------------------------------------------------


def test_damping_params_use_exact_probability():
    params = DampingParams(gamma=2.0, tau_ec=0.1)
    assert params.p == pytest.approx(1 - math.exp(-0.2))


def test_from_probability_inverts_p():
    params = DampingParams.from_probability(0.3, tau_ec=0.5)
    assert params.p == pytest.approx(0.3)
    assert params.tau_ec == 0.5


@pytest.mark.parametrize("gamma,tau", [(-1.0, 0.1), (1.0, 0.0)])
def test_damping_params_reject_invalid(gamma, tau):
    with pytest.raises(ValueError):
        DampingParams(gamma=gamma, tau_ec=tau)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_damping_channel_is_trace_preserving(n):
    channel = damping_channel(0.17, n)
    assert len(channel.operators) == 2**n
    assert channel.is_trace_preserving()


def test_full_decay_maps_excited_to_ground():
    result = apply(damping_channel(1.0, 1), ket("1").density())
    assert np.allclose(result.matrix, ket("0").projector())


def test_zero_probability_is_identity(rng):
    rho = random_density(2, rng)
    result = apply(damping_channel(0.0, 2), rho)
    assert np.allclose(result.matrix, rho.matrix)


def test_damping_composes_over_consecutive_intervals(rng):
    rho = random_density(1, rng)
    first = amplitude_damping(DampingParams(1.0, 0.2), 1)
    second = amplitude_damping(DampingParams(1.0, 0.3), 1)
    joint = amplitude_damping(DampingParams(1.0, 0.5), 1)
    assert np.allclose(apply(second, apply(first, rho)).matrix, apply(joint, rho).matrix)


def test_damping_operator_pattern_lookup():
    channel = damping_channel(0.1, 4)
    assert np.allclose(channel.operator("0100"), damping_operator("0100", 0.1))
    with pytest.raises(KeyError):
        channel.operator("2222")


def test_first_order_operators_keep_five():
    truncated = first_order_operators(damping_channel(0.05, 4))
    assert truncated.patterns == ("0000", "0001", "0010", "0100", "1000")
    assert truncated.selective
    assert not truncated.is_trace_preserving()
    # Missing weight is second order in p.
    assert np.linalg.norm(truncated.completeness_deficit(), 2) < 0.05**2 * 10


def test_first_order_operators_reject_other_registers():
    with pytest.raises(ValueError):
        first_order_operators(damping_channel(0.05, 3))
    with pytest.raises(ValueError):
        first_order_operators(depolarizing(0.1, [0], 4))


def test_pruned_drops_zero_operators():
    pruned = damping_channel(0.0, 2).pruned()
    assert pruned.patterns == ("00",)


# ---------------------------------------------------------------------------
# Depolarizing noise
# ---------------------------------------------------------------------------


def test_full_single_qubit_depolarizing_oracle():
    result = apply(depolarizing(1.0, [0], 1), ket("0").density())
    assert np.allclose(result.matrix, np.diag([1 / 3, 2 / 3]))


def test_two_qubit_depolarizing_has_sixteen_operators():
    channel = depolarizing(0.01, [0, 2], 3)
    assert len(channel.operators) == 16
    assert channel.is_trace_preserving()


def test_depolarizing_rejects_bad_targets():
    with pytest.raises(ValueError):
        depolarizing(0.1, [0, 0], 2)
    with pytest.raises(ValueError):
        depolarizing(0.1, [0, 1, 2], 3)
    with pytest.raises(ValueError):
        depolarizing(1.5, [0], 1)


def test_apply_depolarizing_matches_kraus_form(rng):
    rho = random_density(3, rng)
    fast = apply_depolarizing(rho.matrix, 0.02, [1, 2], 3)
    slow = apply(depolarizing(0.02, [1, 2], 3), rho).matrix
    assert np.allclose(fast, slow)


# ---------------------------------------------------------------------------
# Composition and positivity
# ---------------------------------------------------------------------------


def test_compose_applies_inner_first(rng):
    rho = random_density(1, rng)
    damping = damping_channel(0.3, 1)
    noise = depolarizing(0.2, [0], 1)
    composed = compose(noise, damping)
    assert np.allclose(apply(composed, rho).matrix, apply(noise, apply(damping, rho)).matrix)


def test_superoperator_matches_kraus_action(rng):
    rho = random_density(2, rng)
    channel = damping_channel(0.2, 2)
    vectorized = channel.superoperator() @ rho.matrix.reshape(-1, order="F")
    assert np.allclose(vectorized.reshape(4, 4, order="F"), apply(channel, rho).matrix)


def test_outputs_stay_positive(rng):
    channel = compose(depolarizing(0.05, [0, 1], 4), damping_channel(0.1, 4))
    for _ in range(100):
        apply(channel, random_density(4, rng)).validate(1e-9)


def test_selective_channel_marks_output_unnormalized():
    truncated = first_order_operators(damping_channel(0.1, 4))
    result = apply(truncated, ket("1111").density())
    assert result.unnormalized
    assert result.trace < 1


def test_channel_requires_matching_shapes():
    with pytest.raises(ValueError):
        KrausChannel(operators=(np.eye(2), np.eye(4)), label="bad")
    assert identity_channel(2).is_trace_preserving()
    with pytest.raises(ValueError):
        apply(identity_channel(2), DensityMatrix.maximally_mixed(1))


@pytest.mark.parametrize(
    "channel",
    [
        damping_channel(0.07, 3),
        depolarizing(0.2, [0, 2], 3),
        compose(depolarizing(0.01, [1], 3), damping_channel(0.3, 3)),
    ],
    ids=["damping", "depolarizing", "composed"],
)
def test_trace_preserved_on_random_states(rng, channel):
    for _ in range(500):
        rank = int(rng.integers(1, 9))
        assert apply(channel, random_density(3, rng, rank=rank)).trace == pytest.approx(
            1.0, abs=1e-9
        )


def test_first_order_truncation_loses_second_order_weight():
    zero = four_qubit_code().zero.density()
    ratios = []
    for p in np.geomspace(1e-3, 3e-2, 6):
        kept = apply(first_order_operators(damping_channel(p, 4)), zero)
        ratios.append((1.0 - kept.trace) / p**2)
    assert max(ratios) <= 1.2 * min(ratios)
    assert min(ratios) > 0
