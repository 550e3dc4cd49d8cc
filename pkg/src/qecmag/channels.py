"""Quantum operations in Kraus form.

Amplitude damping uses the exact decay probability ``p = 1 - exp(-γτ)``
inside the Kraus operators, so damping over two consecutive intervals
composes into damping over their sum.

Depolarizing gate noise follows the per-gate error convention: ``p_gate``
is the total probability of any non-identity Pauli on the gate targets,
applied after the ideal gate.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from qecmag.qstate import (
    CHECK_TOLERANCE,
    PAULIS,
    DensityMatrix,
    conjugate,
    embed,
    qubit_count,
    tensor,
)

logger = logging.getLogger(__name__)

DAMPING_KIND = "amplitude_damping"


@dataclass(frozen=True, slots=True)
class DampingParams:
    """Relaxation rate and correction interval."""

    gamma: float
    tau_ec: float

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}.")
        if self.tau_ec <= 0:
            raise ValueError(f"tau_ec must be positive, got {self.tau_ec}.")

    @property
    def p(self) -> float:
        return -math.expm1(-self.gamma * self.tau_ec)

    @classmethod
    def from_probability(cls, p: float, tau_ec: float = 1.0) -> DampingParams:
        if not 0.0 <= p < 1.0:
            raise ValueError(f"Decay probability must lie in [0, 1), got {p}.")
        return cls(gamma=-math.log1p(-p) / tau_ec, tau_ec=tau_ec)


@dataclass(frozen=True)
class KrausChannel:
    """A finite list of Kraus operators sharing one dimension.

    ``selective`` marks trace-decreasing operations (branches of a
    measurement or truncations). ``patterns`` optionally names each operator,
    e.g. the decay pattern ``"0100"`` of a damping operator.
    """

    operators: tuple[np.ndarray, ...]
    label: str
    selective: bool = False
    patterns: tuple[str, ...] = ()
    provenance: tuple = ()

    def __post_init__(self) -> None:
        if not self.operators:
            raise ValueError("A channel needs at least one operator.")
        dim = self.operators[0].shape[0]
        for operator in self.operators:
            if operator.shape != (dim, dim):
                raise ValueError("Kraus operators must share one square shape.")
        if self.patterns and len(self.patterns) != len(self.operators):
            raise ValueError("patterns must name every operator.")

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    @property
    def n_qubits(self) -> int:
        return qubit_count(self.operators[0])

    def completeness(self) -> np.ndarray:
        """Return ``Σ K†K``."""
        return sum(operator.conj().T @ operator for operator in self.operators)

    def completeness_deficit(self) -> np.ndarray:
        """Return ``I - Σ K†K`` (positive semidefinite for a valid channel)."""
        return np.eye(self.dim) - self.completeness()

    def is_trace_preserving(self, tolerance: float = CHECK_TOLERANCE) -> bool:
        return bool(np.allclose(self.completeness(), np.eye(self.dim), atol=tolerance))

    def superoperator(self) -> np.ndarray:
        """Matrix acting on column-stacked density matrices."""
        return sum(np.kron(operator.conj(), operator) for operator in self.operators)

    def pruned(self, tolerance: float = 0.0) -> KrausChannel:
        """Drop operators whose Frobenius norm is at most ``tolerance``."""
        keep = [
            index
            for index, operator in enumerate(self.operators)
            if np.linalg.norm(operator) > tolerance
        ]
        return KrausChannel(
            operators=tuple(self.operators[i] for i in keep),
            label=self.label,
            selective=self.selective,
            patterns=tuple(self.patterns[i] for i in keep) if self.patterns else (),
            provenance=self.provenance,
        )

    def operator(self, pattern: str) -> np.ndarray:
        try:
            return self.operators[self.patterns.index(pattern)]
        except ValueError as error:
            raise KeyError(f"No operator with pattern {pattern!r} in {self.label}.") from error


# --- Amplitude damping ---


def single_qubit_damping(p: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(K0, K1)`` for one qubit with decay probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Decay probability must lie in [0, 1], got {p}.")
    k0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - p)]], dtype=complex)
    k1 = np.array([[0.0, math.sqrt(p)], [0.0, 0.0]], dtype=complex)
    return k0, k1


def damping_operator(pattern: str, p: float) -> np.ndarray:
    """Product operator ``K_s`` for a decay pattern such as ``"1000"``."""
    k0, k1 = single_qubit_damping(p)
    return tensor(*(k1 if bit == "1" else k0 for bit in pattern))


def damping_channel(p: float, n: int) -> KrausChannel:
    """All ``2^n`` product damping operators for decay probability ``p``."""
    if not 1 <= n <= 5:
        raise ValueError(f"Register size {n} outside 1..5.")
    patterns = tuple("".join(bits) for bits in itertools.product("01", repeat=n))
    operators = tuple(damping_operator(pattern, p) for pattern in patterns)
    return KrausChannel(
        operators=operators,
        label=f"damping(p={p:.6g}, n={n})",
        patterns=patterns,
        provenance=(DAMPING_KIND, n, p),
    )


def amplitude_damping(params: DampingParams, n: int) -> KrausChannel:
    """Amplitude damping on every qubit of an ``n``-qubit register."""
    return damping_channel(params.p, n)


def first_order_operators(channel: KrausChannel) -> KrausChannel:
    """Keep the operators with at most one decay (5 for the 4-qubit code).

    Raises:
        ValueError: If ``channel`` is not four-qubit amplitude damping.
    """
    if not channel.provenance or channel.provenance[0] != DAMPING_KIND:
        raise ValueError(f"{channel.label} was not built by amplitude_damping.")
    if channel.provenance[1] != 4:
        raise ValueError("First-order truncation is defined for the 4-qubit register.")
    keep = [i for i, pattern in enumerate(channel.patterns) if pattern.count("1") <= 1]
    return KrausChannel(
        operators=tuple(channel.operators[i] for i in keep),
        label=f"first_order({channel.label})",
        selective=True,
        patterns=tuple(channel.patterns[i] for i in keep),
        provenance=channel.provenance,
    )


# --- Depolarizing noise ---


def _check_targets(targets: Sequence[int], n: int) -> None:
    if len(targets) not in (1, 2):
        raise ValueError(f"Depolarizing noise acts on 1 or 2 qubits, got {list(targets)}.")
    if len(set(targets)) != len(targets) or any(t < 0 or t >= n for t in targets):
        raise ValueError(f"Invalid targets {list(targets)} for {n} qubits.")


@lru_cache(maxsize=512)
def _pauli_errors(targets: tuple[int, ...], n: int) -> tuple[np.ndarray, ...]:
    labels = itertools.product("IXYZ", repeat=len(targets))
    errors = []
    for label in labels:
        if set(label) == {"I"}:
            continue
        local = tensor(*(PAULIS[char] for char in label))
        errors.append(embed(local, list(targets), n))
    return tuple(errors)


def depolarizing(p_gate: float, targets: Sequence[int], n: int) -> KrausChannel:
    """Uniform non-identity Pauli with total probability ``p_gate``."""
    if not 0.0 <= p_gate <= 1.0:
        raise ValueError(f"p_gate must lie in [0, 1], got {p_gate}.")
    _check_targets(targets, n)
    errors = _pauli_errors(tuple(targets), n)
    weight = math.sqrt(p_gate / len(errors))
    operators = (math.sqrt(1.0 - p_gate) * np.eye(1 << n, dtype=complex),) + tuple(
        weight * error for error in errors
    )
    return KrausChannel(operators=operators, label=f"depolarizing(p={p_gate:.3g}, {targets})")


def apply_depolarizing(
    matrix: np.ndarray, p_gate: float, targets: Sequence[int], n: int
) -> np.ndarray:
    """Fast path for :func:`depolarizing` on a raw matrix."""
    if p_gate == 0.0:
        return matrix
    errors = _pauli_errors(tuple(targets), n)
    scrambled = sum(conjugate(matrix, error) for error in errors)
    return (1.0 - p_gate) * matrix + (p_gate / len(errors)) * scrambled


# --- Application and composition ---


def identity_channel(n: int) -> KrausChannel:
    return KrausChannel(operators=(np.eye(1 << n, dtype=complex),), label="identity")


def apply_kraus(matrix: np.ndarray, operators: Sequence[np.ndarray]) -> np.ndarray:
    return sum(conjugate(matrix, operator) for operator in operators)


def apply(channel: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    """Return ``Σ K ρ K†``; selective channels yield an unnormalized branch."""
    if channel.dim != rho.dim:
        raise ValueError(f"Channel dimension {channel.dim} does not match state {rho.dim}.")
    return DensityMatrix(
        apply_kraus(rho.matrix, channel.operators),
        tolerance=rho.tolerance,
        unnormalized=channel.selective or rho.unnormalized,
    )


def compose(outer: KrausChannel, inner: KrausChannel) -> KrausChannel:
    """Channel applying ``inner`` first, then ``outer``."""
    if outer.dim != inner.dim:
        raise ValueError("Cannot compose channels of different dimension.")
    operators = tuple(a @ b for a in outer.operators for b in inner.operators)
    return KrausChannel(
        operators=operators,
        label=f"{outer.label}∘{inner.label}",
        selective=outer.selective or inner.selective,
    )
