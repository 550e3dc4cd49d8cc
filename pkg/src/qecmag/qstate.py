"""Dense states and operators for small qubit registers.

Registers hold 1 to 5 qubits. Qubit 0 is the leftmost ket label, so the
basis state ``|q0 q1 ... q(n-1)⟩`` has index ``int("q0q1...", 2)``. Every
module in the package follows this convention.

Operators are plain complex ``numpy`` arrays. :class:`DensityMatrix` and
:class:`PureState` wrap read-only copies, so values can be shared between
worker threads without locking.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, TypeAlias

import numpy as np

logger = logging.getLogger(__name__)

ComplexOperator: TypeAlias = np.ndarray

MAX_QUBITS = 5
DEFAULT_TOLERANCE = 1e-10
CHECK_TOLERANCE = 1e-9

IDENTITY = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
# |0⟩⟨1|: takes |1⟩ to |0⟩
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
PROJECTOR_0 = np.array([[1, 0], [0, 0]], dtype=complex)
PROJECTOR_1 = np.array([[0, 0], [0, 1]], dtype=complex)

PAULIS: dict[str, np.ndarray] = {"I": IDENTITY, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


class NumericalError(RuntimeError):
    """Raised when a computation cannot produce a trustworthy number.

    Carries an optional ``diagnostics`` mapping (condition numbers,
    residuals, sample counts) for the caller to report.
    """

    def __init__(self, message: str, diagnostics: dict[str, float] | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def qubit_count(op: np.ndarray) -> int:
    """Return n for a 2^n-dimensional vector or square operator."""
    dim = op.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim or n > MAX_QUBITS:
        raise ValueError(f"Dimension {dim} is not 2^n for n in 1..{MAX_QUBITS}.")
    return n


def check_operator(op: np.ndarray) -> np.ndarray:
    """Return ``op`` as a complex array after shape and finiteness checks."""
    matrix = np.asarray(op, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"Operator must be square, got shape {matrix.shape}.")
    qubit_count(matrix)
    if not np.all(np.isfinite(matrix)):
        raise ValueError("Operator has non-finite entries.")
    return matrix


def is_hermitian(op: np.ndarray, tolerance: float = DEFAULT_TOLERANCE) -> bool:
    return bool(np.allclose(op, op.conj().T, atol=tolerance, rtol=0.0))


def _frozen(array: np.ndarray) -> np.ndarray:
    copy = np.array(array, dtype=complex, copy=True)
    copy.flags.writeable = False
    return copy


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit-norm state vector."""

    amplitudes: np.ndarray
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self) -> None:
        vector = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        qubit_count(vector)
        norm = float(np.linalg.norm(vector))
        if abs(norm - 1.0) > max(self.tolerance, 1e-12) * 10:
            raise ValueError(f"State is not normalized (norm {norm:.12g}).")
        object.__setattr__(self, "amplitudes", _frozen(vector))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def n_qubits(self) -> int:
        return qubit_count(self.amplitudes)

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> DensityMatrix:
        return DensityMatrix(self.projector(), tolerance=self.tolerance)

    @classmethod
    def from_unnormalized(cls, vector: np.ndarray) -> PureState:
        vector = np.asarray(vector, dtype=complex)
        norm = np.linalg.norm(vector)
        if norm == 0:
            raise ValueError("Cannot normalize the zero vector.")
        return cls(vector / norm)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density operator over a 1-5 qubit register.

    ``unnormalized`` marks the output of a trace-decreasing (selective)
    operation; such values skip the unit-trace check in :meth:`validate`.
    """

    matrix: np.ndarray
    tolerance: float = DEFAULT_TOLERANCE
    unnormalized: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", _frozen(check_operator(self.matrix)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return qubit_count(self.matrix)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def validate(self, tolerance: float | None = None) -> DensityMatrix:
        """Check Hermiticity, trace and positivity. Returns ``self``.

        Raises:
            ValueError: If any check fails at ``tolerance``.
        """
        tol = self.tolerance if tolerance is None else tolerance
        if not is_hermitian(self.matrix, tol):
            raise ValueError("Density matrix is not Hermitian.")
        if not self.unnormalized and abs(self.trace - 1.0) > tol:
            raise ValueError(f"Density matrix trace is {self.trace:.12g}, expected 1.")
        smallest = float(np.linalg.eigvalsh(self.matrix).min())
        if smallest < -tol:
            raise ValueError(f"Density matrix has negative eigenvalue {smallest:.3g}.")
        return self

    def normalized(self) -> DensityMatrix:
        trace = self.trace
        if trace <= 0:
            raise NumericalError("Cannot normalize a branch with zero trace.")
        return DensityMatrix(self.matrix / trace, tolerance=self.tolerance)

    @classmethod
    def from_pure(cls, state: PureState | np.ndarray) -> DensityMatrix:
        if not isinstance(state, PureState):
            state = PureState(state)
        return cls(state.projector(), tolerance=state.tolerance)

    @classmethod
    def maximally_mixed(cls, n: int) -> DensityMatrix:
        dim = 1 << n
        return cls(np.eye(dim, dtype=complex) / dim)


@dataclass(frozen=True, eq=False)
class MeasurementBranch:
    """One outcome of a projective measurement.

    ``state`` is the renormalized conditional state, or ``None`` when the
    outcome has (numerically) zero probability.
    """

    probability: float
    state: DensityMatrix | None
    label: int

    @property
    def empty(self) -> bool:
        return self.state is None


# --- Construction helpers ---


def ket(bits: str) -> PureState:
    """Return the computational basis state ``|bits⟩``."""
    if not bits or any(bit not in "01" for bit in bits):
        raise ValueError(f"Invalid basis label {bits!r}.")
    vector = np.zeros(1 << len(bits), dtype=complex)
    vector[int(bits, 2)] = 1.0
    return PureState(vector)


def tensor(*operators: np.ndarray) -> np.ndarray:
    """Kronecker product, leftmost factor acting on qubit 0."""
    if not operators:
        raise ValueError("tensor() needs at least one factor.")
    return reduce(np.kron, operators)


def pauli_string(label: str) -> np.ndarray:
    """Operator for a label such as ``"ZIZI"`` (character i acts on qubit i)."""
    try:
        return tensor(*(PAULIS[char] for char in label.upper()))
    except KeyError as error:
        raise ValueError(f"Invalid Pauli label {label!r}.") from error


def embed(op: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Lift a k-qubit operator onto ``targets`` of an n-qubit register.

    ``targets[i]`` receives the i-th tensor factor of ``op``. All other
    qubits see the identity.
    """
    op = np.asarray(op, dtype=complex)
    k = len(targets)
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"Register size {n} outside 1..{MAX_QUBITS}.")
    if len(set(targets)) != k:
        raise ValueError(f"Duplicate targets {list(targets)}.")
    if any(t < 0 or t >= n for t in targets):
        raise ValueError(f"Targets {list(targets)} out of range for {n} qubits.")
    if op.shape != (1 << k, 1 << k):
        raise ValueError(f"Operator shape {op.shape} does not match {k} targets.")

    rest = [q for q in range(n) if q not in targets]
    order = list(targets) + rest
    full = np.kron(op, np.eye(1 << len(rest), dtype=complex))
    if order == list(range(n)):
        return full
    axes = [order.index(q) for q in range(n)]
    full = full.reshape((2,) * (2 * n)).transpose(axes + [n + a for a in axes])
    return full.reshape(1 << n, 1 << n)


def conjugate(matrix: np.ndarray, operator: np.ndarray) -> np.ndarray:
    """Return ``operator @ matrix @ operator†``."""
    return operator @ matrix @ operator.conj().T


def apply_unitary(rho: DensityMatrix, unitary: np.ndarray) -> DensityMatrix:
    return DensityMatrix(
        conjugate(rho.matrix, unitary), tolerance=rho.tolerance, unnormalized=rho.unnormalized
    )


def expectation(rho: DensityMatrix | np.ndarray, op: np.ndarray) -> float:
    matrix = rho.matrix if isinstance(rho, DensityMatrix) else rho
    return float(np.real(np.trace(op @ matrix)))


# --- Dynamics ---


def unitary_from_hamiltonian(hamiltonian: np.ndarray, t: float) -> np.ndarray:
    """Return ``exp(-iHt)`` by Hermitian eigendecomposition."""
    hamiltonian = check_operator(hamiltonian)
    if not is_hermitian(hamiltonian, CHECK_TOLERANCE):
        raise ValueError("Hamiltonian is not Hermitian.")
    if t < 0:
        raise ValueError(f"Evolution time must be non-negative, got {t}.")
    energies, vectors = np.linalg.eigh(hamiltonian)
    return (vectors * np.exp(-1j * energies * t)) @ vectors.conj().T


def evolve_hamiltonian(rho: DensityMatrix, hamiltonian: np.ndarray, t: float) -> DensityMatrix:
    """Evolve ``rho`` for time ``t`` under ``hamiltonian``."""
    if hamiltonian.shape != rho.matrix.shape:
        raise ValueError("Hamiltonian and state dimensions differ.")
    if t == 0:
        return rho
    return apply_unitary(rho, unitary_from_hamiltonian(hamiltonian, t))


# --- Measurement ---


def _check_projectors(projectors: Sequence[np.ndarray], dim: int, tolerance: float) -> None:
    if not projectors:
        raise ValueError("Empty projector set.")
    total = np.zeros((dim, dim), dtype=complex)
    for index, projector in enumerate(projectors):
        if projector.shape != (dim, dim):
            raise ValueError(f"Projector {index} has shape {projector.shape}.")
        if not is_hermitian(projector, tolerance):
            raise ValueError(f"Projector {index} is not Hermitian.")
        if not np.allclose(projector @ projector, projector, atol=tolerance):
            raise ValueError(f"Projector {index} is not idempotent.")
        total += projector
    if not np.allclose(total, np.eye(dim), atol=tolerance):
        raise ValueError("Projectors do not sum to the identity.")
    for i in range(len(projectors)):
        for j in range(i + 1, len(projectors)):
            if not np.allclose(projectors[i] @ projectors[j], 0, atol=tolerance):
                raise ValueError(f"Projectors {i} and {j} are not orthogonal.")


def measure_projective(
    rho: DensityMatrix, projectors: Sequence[np.ndarray]
) -> list[MeasurementBranch]:
    """Enumerate the outcomes of a complete projective measurement."""
    tolerance = max(rho.tolerance, CHECK_TOLERANCE)
    _check_projectors(projectors, rho.dim, tolerance)
    trace = rho.trace
    if trace <= 0:
        raise NumericalError("Cannot measure a state with non-positive trace.")

    branches: list[MeasurementBranch] = []
    for label, projector in enumerate(projectors):
        projected = conjugate(rho.matrix, projector)
        probability = float(np.real(np.trace(projected))) / trace
        if probability <= rho.tolerance:
            branches.append(MeasurementBranch(max(probability, 0.0), None, label))
            continue
        state = DensityMatrix(projected / (probability * trace), tolerance=rho.tolerance)
        branches.append(MeasurementBranch(probability, state, label))
    return branches


def fidelity_with_pure(rho: DensityMatrix, psi: PureState) -> float:
    """Return ``⟨ψ|ρ|ψ⟩`` clamped to [0, 1]."""
    if rho.dim != psi.dim:
        raise ValueError(f"Dimension mismatch: state {rho.dim}, target {psi.dim}.")
    value = float(np.real(np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes)))
    return min(1.0, max(0.0, value))


# --- Register surgery ---


def partial_trace(matrix: np.ndarray, keep: Iterable[int], n: int) -> np.ndarray:
    """Trace out every qubit not listed in ``keep`` (kept order is ascending)."""
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("partial_trace must keep at least one qubit.")
    tensor_form = np.asarray(matrix).reshape((2,) * (2 * n))
    current = n
    for qubit in sorted((q for q in range(n) if q not in keep), reverse=True):
        tensor_form = np.trace(tensor_form, axis1=qubit, axis2=qubit + current)
        current -= 1
    dim = 1 << current
    return tensor_form.reshape(dim, dim)


def append_qubit(matrix: np.ndarray, qubit_state: np.ndarray) -> np.ndarray:
    """Append a qubit (as the new last index) in the given 2x2 state."""
    return np.kron(matrix, qubit_state)


def reset_qubits(matrix: np.ndarray, targets: Iterable[int], n: int) -> np.ndarray:
    """Trace out each target and replace it with ``|0⟩``."""
    result = np.asarray(matrix, dtype=complex)
    for target in targets:
        keep_ground = embed(PROJECTOR_0, [target], n)
        lower = embed(SIGMA_MINUS, [target], n)
        result = conjugate(result, keep_ground) + conjugate(result, lower)
    return result


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random density matrix from a Ginibre ensemble."""
    dim = 1 << n
    rank = rank or dim
    ginibre = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    matrix = ginibre @ ginibre.conj().T
    return DensityMatrix(matrix / np.real(np.trace(matrix)))
