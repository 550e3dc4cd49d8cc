"""Gate lists, their noisy execution and their time cost.

Correction circuits run on a five-qubit register: data qubits 0-3 and the
ancilla at index 4. Hardware is a linear chain ``q1 - q0 - A - q2 - q3``;
states are simulated with all-to-all gates, but every two-qubit gate between
non-neighbours is charged SWAP hops in the timing. Charging the SWAPs as
extra faults is opt-in (``GateNoise.route_swaps``).

Measurements split the state into unnormalized branches keyed by the tuple
of outcomes recorded so far.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from qecmag.channels import apply_depolarizing
from qecmag.qstate import (
    HADAMARD,
    PAULI_X,
    PAULI_Z,
    PROJECTOR_0,
    PROJECTOR_1,
    conjugate,
    embed,
    reset_qubits,
)

logger = logging.getLogger(__name__)

ANCILLA = 4
REGISTER = 5
# Register indices in chain order.
LINEAR_CHAIN: tuple[int, ...] = (1, 0, ANCILLA, 2, 3)
SWAP_GATES = 3

SINGLE_QUBIT_GATES = frozenset({"h", "x", "z", "ry", "rz"})
TWO_QUBIT_GATES = frozenset({"cnot", "cz"})
PREPARATIONS = frozenset({"prep0", "prep1", "prep_plus"})
GATE_NAMES = SINGLE_QUBIT_GATES | TWO_QUBIT_GATES | PREPARATIONS | {"measure", "reset"}

_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)


@dataclass(frozen=True, slots=True)
class Gate:
    """One circuit element. For ``cnot`` the first target is the control."""

    name: str
    targets: tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self) -> None:
        if self.name not in GATE_NAMES:
            raise ValueError(f"Unknown gate {self.name!r}.")
        arity = 2 if self.name in TWO_QUBIT_GATES else 1
        if len(self.targets) != arity:
            raise ValueError(f"Gate {self.name} takes {arity} target(s), got {self.targets}.")
        if len(set(self.targets)) != arity:
            raise ValueError(f"Gate {self.name} has repeated targets {self.targets}.")

    @property
    def is_two_qubit(self) -> bool:
        return self.name in TWO_QUBIT_GATES

    def __str__(self) -> str:
        args = ",".join(str(t) for t in self.targets)
        if self.name in ("ry", "rz"):
            return f"{self.name}({self.angle:.6g})[{args}]"
        return f"{self.name}[{args}]"


def gate(name: str, *targets: int, angle: float = 0.0) -> Gate:
    return Gate(name, tuple(targets), angle)


def swap_hops(item: Gate, layout: Sequence[int] = LINEAR_CHAIN) -> int:
    """Number of SWAPs needed to bring a two-qubit gate's targets together."""
    if not item.is_two_qubit:
        return 0
    first, second = (layout.index(t) for t in item.targets)
    return max(abs(first - second) - 1, 0)


# --- Noise ---


@dataclass(frozen=True, slots=True)
class GateNoise:
    """Depolarizing gate noise.

    Each unitary gate is followed by a fault of total probability ``p_gate``
    on its targets. With ``readout_faults`` preparations, resets and
    measurements get one single-qubit fault each; with ``route_swaps`` a
    routed gate gets ``SWAP_GATES`` extra two-qubit faults per hop.
    """

    p_gate: float = 0.0
    layout: tuple[int, ...] = LINEAR_CHAIN
    route_swaps: bool = False
    readout_faults: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_gate <= 1.0:
            raise ValueError(f"p_gate must lie in [0, 1], got {self.p_gate}.")
        if sorted(self.layout) != list(range(REGISTER)):
            raise ValueError(f"Layout {self.layout} is not a permutation of the register.")

    @property
    def active(self) -> bool:
        return self.p_gate > 0.0


def _fault(matrix: np.ndarray, targets: Sequence[int], n: int, noise: GateNoise | None):
    if noise is None or not noise.active:
        return matrix
    return apply_depolarizing(matrix, noise.p_gate, targets, n)


def _readout_fault(matrix: np.ndarray, target: int, n: int, noise: GateNoise | None):
    if noise is None or not noise.readout_faults:
        return matrix
    return _fault(matrix, [target], n, noise)


# --- Execution ---


def _local_unitary(name: str, angle: float) -> np.ndarray:
    if name == "h":
        return HADAMARD
    if name == "x":
        return PAULI_X
    if name == "z":
        return PAULI_Z
    if name == "ry":
        c, s = math.cos(angle / 2), math.sin(angle / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if name == "rz":
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    if name == "cnot":
        return _CNOT
    if name == "cz":
        return _CZ
    raise ValueError(f"Gate {name!r} has no unitary.")


@lru_cache(maxsize=1024)
def gate_unitary(item: Gate, n: int = REGISTER) -> np.ndarray:
    return embed(_local_unitary(item.name, item.angle), list(item.targets), n)


@lru_cache(maxsize=64)
def _outcome_projector(outcome: int, target: int, n: int) -> np.ndarray:
    return embed(PROJECTOR_1 if outcome else PROJECTOR_0, [target], n)


def _apply_gate(matrix: np.ndarray, item: Gate, n: int, noise: GateNoise | None) -> np.ndarray:
    if item.name in PREPARATIONS or item.name == "reset":
        target = item.targets[0]
        matrix = reset_qubits(matrix, [target], n)
        if item.name == "prep1":
            matrix = conjugate(matrix, gate_unitary(Gate("x", (target,)), n))
        elif item.name == "prep_plus":
            matrix = conjugate(matrix, gate_unitary(Gate("h", (target,)), n))
        return _readout_fault(matrix, target, n, noise)

    matrix = conjugate(matrix, gate_unitary(item, n))
    matrix = _fault(matrix, item.targets, n, noise)
    if noise is not None and noise.active and noise.route_swaps:
        for _ in range(SWAP_GATES * swap_hops(item, noise.layout)):
            matrix = _fault(matrix, item.targets, n, noise)
    return matrix


def measure_qubit(
    matrix: np.ndarray, target: int, n: int, noise: GateNoise | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Z-basis readout; returns the unnormalized post-states for outcomes 0 and 1."""
    matrix = _readout_fault(matrix, target, n, noise)
    return (
        conjugate(matrix, _outcome_projector(0, target, n)),
        conjugate(matrix, _outcome_projector(1, target, n)),
    )


def execute(
    matrix: np.ndarray,
    gates: Iterable[Gate],
    n: int = REGISTER,
    noise: GateNoise | None = None,
) -> dict[tuple[int, ...], np.ndarray]:
    """Run ``gates`` on ``matrix`` and return one branch per measurement record."""
    branches: dict[tuple[int, ...], np.ndarray] = {(): np.asarray(matrix, dtype=complex)}
    for item in gates:
        if item.name == "measure":
            split: dict[tuple[int, ...], np.ndarray] = {}
            for record, state in branches.items():
                zero, one = measure_qubit(state, item.targets[0], n, noise)
                split[record + (0,)] = zero
                split[record + (1,)] = one
            branches = split
        else:
            branches = {
                record: _apply_gate(state, item, n, noise) for record, state in branches.items()
            }
    return branches


# --- Timing ---


@dataclass(frozen=True, slots=True)
class TimingModel:
    """Gate durations in μs."""

    t_cphase: float = 40e-3
    t_measurement: float = 0.2
    swap_overhead: int = SWAP_GATES
    single_qubit_time: float = 10e-3

    def __post_init__(self) -> None:
        if min(self.t_cphase, self.t_measurement, self.single_qubit_time) < 0:
            raise ValueError("Gate durations must be non-negative.")
        if self.swap_overhead < 0:
            raise ValueError("swap_overhead must be non-negative.")


@dataclass(frozen=True, slots=True)
class CircuitCost:
    duration: float
    native_two_qubit: int
    routed_two_qubit: int
    measurements: int
    swaps: int


def circuit_cost(
    gates: Iterable[Gate],
    timing: TimingModel | None = None,
    layout: Sequence[int] = LINEAR_CHAIN,
) -> CircuitCost:
    """Serial duration and two-qubit gate counts of a gate list.

    Resets cost a measurement plus a single-qubit flip; preparations cost one
    single-qubit gate.
    """
    timing = timing or TimingModel()
    duration = 0.0
    native = swaps = measurements = 0
    for item in gates:
        if not isinstance(item, Gate):
            raise ValueError(f"Not a gate: {item!r}.")
        if item.is_two_qubit:
            hops = swap_hops(item, layout)
            native += 1
            swaps += hops
            duration += timing.t_cphase * (1 + timing.swap_overhead * hops)
        elif item.name == "measure":
            measurements += 1
            duration += timing.t_measurement
        elif item.name == "reset":
            measurements += 1
            duration += timing.t_measurement + timing.single_qubit_time
        else:
            duration += timing.single_qubit_time
    return CircuitCost(
        duration=duration,
        native_two_qubit=native,
        routed_two_qubit=native + timing.swap_overhead * swaps,
        measurements=measurements,
        swaps=swaps,
    )
