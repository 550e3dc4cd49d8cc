"""The four-qubit approximate amplitude-damping code.

Codewords are ``|0̄⟩ = |ψ⁺⟩|ψ⁺⟩`` and ``|1̄⟩ = |ψ⁻⟩|ψ⁻⟩`` on the pairs
(q0, q1) and (q2, q3). The syndrome bits are the Z-parities of the two pairs:

    (0, 0)  no decay (or an even second-order event)
    (1, 0)  one decay on q0 or q1
    (0, 1)  one decay on q2 or q3
    (1, 1)  one decay on each pair, left untouched

The parities are read by folding: ``cnot 0,1`` and ``cnot 2,3`` put them on
q1 and q3, which are measured directly. Each corrector starts in that folded
frame and undoes the fold itself, so gate noise and timing are accounted
gate by gate on the data plus one ancilla.

In the folded (0, 0) sector the no-decay corrector maps q0 to the flag
"|0000⟩/|1111⟩ vs |0011⟩/|1100⟩" and q2 to which of the two. A rotation on
q2 controlled by the flag restores the damped ratio exactly; nothing is
measured, so the branch carries no Pauli frame. :class:`PauliFrame` and
:func:`resolve_pauli_frame` stay the general mechanism for outcomes that do.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Literal

import numpy as np
import scipy.linalg

from qecmag.channels import KrausChannel, first_order_operators
from qecmag.circuits import (
    ANCILLA,
    REGISTER,
    Gate,
    GateNoise,
    TimingModel,
    circuit_cost,
    execute,
    gate,
    gate_unitary,
)
from qecmag.qstate import (
    CHECK_TOLERANCE,
    PAULI_Z,
    PROJECTOR_0,
    DensityMatrix,
    NumericalError,
    PureState,
    append_qubit,
    conjugate,
    partial_trace,
    pauli_string,
    tensor,
)

logger = logging.getLogger(__name__)

DATA_QUBITS = (0, 1, 2, 3)
SYNDROMES: tuple[tuple[int, int], ...] = ((0, 0), (0, 1), (1, 0), (1, 1))
MAX_DECAY_PROBABILITY = 0.5
# Smallest branch weight worth correcting; lighter branches are dropped.
BRANCH_FLOOR = 1e-15

AbortPolicy = Literal["keep", "discard"]
Mode = Literal["deterministic", "trajectory"]


class ContractError(ValueError):
    """A corrector was handed a state from another syndrome branch."""


# --- Code ---


@dataclass(frozen=True, eq=False)
class CodeSpec:
    zero: PureState
    one: PureState
    stabilizers: dict[str, np.ndarray]
    logical_x: np.ndarray
    logical_z: np.ndarray

    def basis(self) -> np.ndarray:
        """16x2 isometry whose columns are the codewords."""
        return np.column_stack([self.zero.amplitudes, self.one.amplitudes])

    def projector(self) -> np.ndarray:
        return self.zero.projector() + self.one.projector()

    def codeword(self, alpha: complex, beta: complex) -> PureState:
        return PureState(alpha * self.zero.amplitudes + beta * self.one.amplitudes)


@lru_cache(maxsize=1)
def four_qubit_code() -> CodeSpec:
    plus = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
    minus = np.array([1, 0, 0, -1], dtype=complex) / math.sqrt(2)
    return CodeSpec(
        zero=PureState(np.kron(plus, plus)),
        one=PureState(np.kron(minus, minus)),
        stabilizers={
            "XXXX": pauli_string("XXXX"),
            "ZZII": pauli_string("ZZII"),
            "IIZZ": pauli_string("IIZZ"),
        },
        logical_x=pauli_string("ZIZI"),
        logical_z=pauli_string("XXII"),
    )


def encode(alpha: complex, beta: complex) -> PureState:
    """Return ``α|0̄⟩ + β|1̄⟩``."""
    norm = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(norm - 1.0) > CHECK_TOLERANCE:
        raise ValueError(f"Logical amplitudes are not normalized (|α|²+|β|² = {norm:.12g}).")
    return four_qubit_code().codeword(alpha, beta)


def logical_state(name: str) -> PureState:
    """Named encoded states: ``zero``, ``one``, ``plus``, ``plus_i``."""
    root = 1 / math.sqrt(2)
    amplitudes = {
        "zero": (1.0, 0.0),
        "one": (0.0, 1.0),
        "plus": (root, root),
        "plus_i": (root, 1j * root),
    }
    try:
        return encode(*amplitudes[name])
    except KeyError as error:
        raise ValueError(f"Unknown logical state {name!r}.") from error


# --- Pauli frames ---

_PAULI_PRODUCT = {
    ("I", "I"): "I", ("I", "X"): "X", ("I", "Y"): "Y", ("I", "Z"): "Z",
    ("X", "I"): "X", ("X", "X"): "I", ("X", "Y"): "Z", ("X", "Z"): "Y",
    ("Y", "I"): "Y", ("Y", "X"): "Z", ("Y", "Y"): "I", ("Y", "Z"): "X",
    ("Z", "I"): "Z", ("Z", "X"): "Y", ("Z", "Y"): "X", ("Z", "Z"): "I",
}  # fmt: skip


@dataclass(frozen=True, slots=True)
class PauliFrame:
    """A known 4-qubit Pauli correction still to be applied (phase ignored)."""

    label: str = "IIII"

    def __post_init__(self) -> None:
        if len(self.label) != 4 or any(char not in "IXYZ" for char in self.label):
            raise ValueError(f"Invalid Pauli frame {self.label!r}.")

    @property
    def is_identity(self) -> bool:
        return self.label == "IIII"

    def compose(self, other: PauliFrame) -> PauliFrame:
        return PauliFrame("".join(_PAULI_PRODUCT[pair] for pair in zip(self.label, other.label)))

    def operator(self) -> np.ndarray:
        return pauli_string(self.label)


IDENTITY_FRAME = PauliFrame()


# --- Outcomes ---


class Branch(str, Enum):
    NO_DECAY = "no_decay"
    DECAY_Q1_OR_Q2 = "decay_q1_or_q2"
    DECAY_Q3_OR_Q4 = "decay_q3_or_q4"
    UNCORRECTABLE = "uncorrectable"
    FILTER_ABORT = "filter_abort"


SYNDROME_BRANCH = {
    (0, 0): Branch.NO_DECAY,
    (1, 0): Branch.DECAY_Q1_OR_Q2,
    (0, 1): Branch.DECAY_Q3_OR_Q4,
    (1, 1): Branch.UNCORRECTABLE,
}


@dataclass(frozen=True, eq=False)
class SyndromeOutcome:
    b1: int
    b2: int
    probability: float
    post_state: DensityMatrix | None

    @property
    def key(self) -> tuple[int, int]:
        return (self.b1, self.b2)

    @property
    def empty(self) -> bool:
        return self.post_state is None


@dataclass(frozen=True, eq=False)
class CorrectionOutcome:
    """One correction result; ``probability`` is its weight within the syndrome branch."""

    syndrome: SyndromeOutcome
    branch: Branch
    pauli_frame: PauliFrame
    post_state: DensityMatrix | None
    duration: float
    probability: float = 1.0

    def __post_init__(self) -> None:
        if self.duration < 0:
            raise ValueError("Correction duration cannot be negative.")


@dataclass
class CorrectionStatistics:
    """Branch weights of one :func:`full_correction` call."""

    weights: dict[Branch, float] = field(default_factory=lambda: {b: 0.0 for b in Branch})
    mean_duration: float = 0.0
    discarded: float = 0.0

    @property
    def abort_weight(self) -> float:
        return self.weights[Branch.FILTER_ABORT]

    def add(self, outcome: CorrectionOutcome, weight: float) -> None:
        self.weights[outcome.branch] += weight
        self.mean_duration += weight * outcome.duration

    def as_dict(self) -> dict[str, float]:
        report = {branch.value: weight for branch, weight in self.weights.items()}
        report["mean_duration"] = self.mean_duration
        report["discarded"] = self.discarded
        return report


# --- Circuits ---

# Self-inverse: the same pair of gates folds and unfolds.
FOLD: tuple[Gate, ...] = (gate("cnot", 0, 1), gate("cnot", 2, 3))


def no_decay_angle(p: float) -> float:
    """θ = atan((1 - p)²)."""
    return math.atan((1.0 - p) ** 2)


def filter_angle(p: float) -> float:
    """φ = acos(1 - p)."""
    return math.acos(1.0 - p)


def _checked_angle_probability(p: float, delta_p: float) -> float:
    value = p + delta_p
    if not 0.0 <= value < 1.0:
        raise ValueError(f"Assumed decay probability p + δp = {value} outside [0, 1).")
    return value


def syndrome_circuit() -> tuple[Gate, ...]:
    """Fold each pair onto its second qubit and read the parities there.

    The register is left folded; every corrector starts with that frame.
    """
    return (*FOLD, gate("measure", 1), gate("measure", 3))


def _no_decay_gates(p: float) -> tuple[Gate, ...]:
    omega = math.pi / 4 - no_decay_angle(p)
    return (
        # q0 <- parity flag, q2 <- damped amplitude of |0000⟩ vs |1111⟩
        gate("cnot", 2, 0),
        # Ry(2ω) on q2 while the flag is 0
        gate("cnot", 0, 2),
        gate("ry", 2, angle=omega),
        gate("cnot", 0, 2),
        gate("ry", 2, angle=omega),
        gate("cnot", 2, 0),
        *FOLD,
    )


def _filter_gates(control: int, p: float) -> tuple[Gate, ...]:
    """Damp the |00⟩ component of the surviving pair by cos φ; ancilla 1 means success."""
    a = ANCILLA
    phi = filter_angle(p)
    return (
        gate("prep1", a),
        gate("h", a),
        gate("x", control),
        gate("rz", a, angle=phi),
        gate("cnot", control, a),
        gate("rz", a, angle=-phi),
        gate("cnot", control, a),
        gate("x", control),
        gate("h", a),
        gate("measure", a),
    )


def _restore_gates(side: int) -> tuple[Gate, ...]:
    if side == 12:
        decayed, survivor, partner = (0, 1), 2, 3
        encoder = (gate("cnot", 2, 3), gate("h", 2), gate("cnot", 2, 0))
    else:
        decayed, survivor, partner = (2, 3), 0, 1
        encoder = (gate("cnot", 0, 1), gate("h", 0), gate("cnot", 0, 2))
    return (
        gate("reset", decayed[0]),
        gate("reset", decayed[1]),
        gate("x", survivor),
        gate("x", partner),
        *encoder,
        gate("h", 0),
        gate("h", 2),
        gate("cnot", 0, 1),
        gate("cnot", 2, 3),
    )


def _check_side(side: int) -> None:
    if side not in (12, 34):
        raise ValueError(f"side must be 12 or 34, got {side}.")


def correction_circuit(branch: Branch, p: float = 0.0) -> tuple[Gate, ...]:
    """Gate list of one corrector, syndrome extraction excluded.

    Every list starts in the folded frame left by :func:`syndrome_circuit`.
    """
    if branch is Branch.NO_DECAY:
        return _no_decay_gates(p)
    if branch is Branch.DECAY_Q1_OR_Q2:
        return FOLD + _filter_gates(2, p) + _restore_gates(12)
    if branch is Branch.DECAY_Q3_OR_Q4:
        return FOLD + _filter_gates(0, p) + _restore_gates(34)
    return FOLD


# --- Syndrome extraction ---


@lru_cache(maxsize=1)
def _syndrome_projectors() -> tuple[np.ndarray, ...]:
    identity = np.eye(4, dtype=complex)
    parity = tensor(PAULI_Z, PAULI_Z)
    pair = {0: (identity + parity) / 2, 1: (identity - parity) / 2}
    return tuple(np.kron(pair[b1], pair[b2]) for b1, b2 in SYNDROMES)


def _outcome(b1: int, b2: int, unnormalized: np.ndarray, total: float) -> SyndromeOutcome:
    weight = float(np.real(np.trace(unnormalized)))
    probability = max(weight / total, 0.0)
    if probability <= BRANCH_FLOOR:
        return SyndromeOutcome(b1, b2, probability, None)
    return SyndromeOutcome(b1, b2, probability, DensityMatrix(unnormalized / weight))


def extract_syndrome(
    rho: DensityMatrix, noise: GateNoise | None = None
) -> list[SyndromeOutcome]:
    """Measure the two pair parities; outcomes are ordered as :data:`SYNDROMES`."""
    if rho.dim != 16:
        raise ValueError(f"Syndrome extraction needs a 4-qubit state, got dim {rho.dim}.")
    total = rho.trace
    if total <= 0:
        raise NumericalError("Cannot extract a syndrome from a state with zero trace.")

    if noise is None or not noise.active:
        return [
            _outcome(b1, b2, conjugate(rho.matrix, projector), total)
            for (b1, b2), projector in zip(SYNDROMES, _syndrome_projectors())
        ]

    register = append_qubit(rho.matrix, PROJECTOR_0)
    records = execute(register, syndrome_circuit(), REGISTER, noise)
    return [
        _outcome(b1, b2, _fold(partial_trace(records[(b1, b2)], DATA_QUBITS, REGISTER)), total)
        for b1, b2 in SYNDROMES
    ]


@lru_cache(maxsize=1)
def _fold_unitary() -> np.ndarray:
    return gate_unitary(FOLD[0], 4) @ gate_unitary(FOLD[1], 4)


def _fold(matrix: np.ndarray) -> np.ndarray:
    """Noiseless change between the code frame and the folded frame."""
    return conjugate(matrix, _fold_unitary())


def _branch_outcome(
    branch: SyndromeOutcome | DensityMatrix, expected: tuple[int, int]
) -> SyndromeOutcome:
    """Accept a tagged syndrome branch or a raw state lying in the expected sector."""
    if isinstance(branch, SyndromeOutcome):
        if branch.key != expected:
            raise ContractError(f"Corrector for syndrome {expected} got branch {branch.key}.")
        if branch.empty:
            raise ContractError(f"Syndrome branch {expected} is empty.")
        return branch
    if branch.dim != 16:
        raise ValueError(f"Correctors act on 4-qubit states, got dim {branch.dim}.")
    projector = _syndrome_projectors()[SYNDROMES.index(expected)]
    inside = float(np.real(np.trace(projector @ branch.matrix))) / branch.trace
    if inside < 1.0 - CHECK_TOLERANCE:
        raise ContractError(
            f"State has weight {inside:.6g} in syndrome sector {expected}; expected 1."
        )
    return SyndromeOutcome(expected[0], expected[1], 1.0, branch.normalized())


def _run_on_data(
    state: DensityMatrix, gates: tuple[Gate, ...], noise: GateNoise | None
) -> dict[tuple[int, ...], np.ndarray]:
    """Run a corrector on a code-frame branch state, starting from the folded frame."""
    register = append_qubit(_fold(state.matrix), PROJECTOR_0)
    return execute(register, gates, REGISTER, noise)


def _data_outcome(
    syndrome: SyndromeOutcome,
    branch: Branch,
    register: np.ndarray,
    duration: float,
    frame: PauliFrame = IDENTITY_FRAME,
) -> CorrectionOutcome:
    data = partial_trace(register, DATA_QUBITS, REGISTER)
    weight = float(np.real(np.trace(data)))
    if weight <= BRANCH_FLOOR:
        return CorrectionOutcome(syndrome, branch, frame, None, duration, max(weight, 0.0))
    state = DensityMatrix(data / weight)
    return CorrectionOutcome(syndrome, branch, frame, state, duration, weight)


def _duration(*gates: tuple[Gate, ...]) -> float:
    timing = TimingModel()
    return sum(circuit_cost(part, timing).duration for part in gates)


# --- Correctors ---


def no_decay_outcomes(
    rho_branch: SyndromeOutcome | DensityMatrix,
    p: float,
    noise: GateNoise | None = None,
    delta_p: float = 0.0,
) -> list[CorrectionOutcome]:
    """Outcomes of the no-decay corrector, frames not yet applied.

    The corrector measures nothing, so this is one identity-frame outcome.
    """
    syndrome = _branch_outcome(rho_branch, (0, 0))
    gates = _no_decay_gates(_checked_angle_probability(p, delta_p))
    duration = _duration(syndrome_circuit(), gates)
    records = _run_on_data(syndrome.post_state, gates, noise)
    return [_data_outcome(syndrome, Branch.NO_DECAY, records[()], duration)]


def correct_no_decay(
    rho_branch: SyndromeOutcome | DensityMatrix,
    p: float,
    noise: GateNoise | None = None,
    delta_p: float = 0.0,
) -> DensityMatrix:
    """Correct the (0, 0) branch and return the frame-resolved state."""
    outcomes = no_decay_outcomes(rho_branch, p, noise, delta_p)
    matrix = sum(
        outcome.probability * resolve_pauli_frame(outcome).matrix
        for outcome in outcomes
        if outcome.post_state is not None
    )
    return DensityMatrix(matrix).normalized()


def correct_single_decay(
    rho_branch: SyndromeOutcome | DensityMatrix,
    side: int,
    p: float,
    noise: GateNoise | None = None,
    delta_p: float = 0.0,
) -> list[CorrectionOutcome]:
    """Filter, reset the decayed pair and rebuild the codeword.

    Returns ``[success, abort]``. The abort outcome keeps the filtered,
    uncorrected state.
    """
    _check_side(side)
    expected = (1, 0) if side == 12 else (0, 1)
    syndrome = _branch_outcome(rho_branch, expected)
    assumed = _checked_angle_probability(p, delta_p)
    control = 2 if side == 12 else 0
    filter_gates = _filter_gates(control, assumed)
    restore_gates = _restore_gates(side)
    branch = Branch.DECAY_Q1_OR_Q2 if side == 12 else Branch.DECAY_Q3_OR_Q4

    filtered = _run_on_data(syndrome.post_state, FOLD + filter_gates, noise)
    restored = execute(filtered[(1,)], restore_gates, REGISTER, noise)[()]
    reached = (syndrome_circuit(), FOLD, filter_gates)
    success = _data_outcome(syndrome, branch, restored, _duration(*reached, restore_gates))
    abort = _data_outcome(syndrome, Branch.FILTER_ABORT, filtered[(0,)], _duration(*reached))
    if abort.probability > CHECK_TOLERANCE:
        logger.debug("Filter abort weight %.3g on side %d", abort.probability, side)
    return [success, abort]


def correct_uncorrectable(
    rho_branch: SyndromeOutcome | DensityMatrix, noise: GateNoise | None = None
) -> CorrectionOutcome:
    """Leave the (1, 1) branch as it is; only the unfold (and its noise) acts."""
    if isinstance(rho_branch, SyndromeOutcome):
        syndrome = rho_branch
    else:
        syndrome = SyndromeOutcome(1, 1, 1.0, rho_branch)
    duration = _duration(syndrome_circuit(), FOLD)
    if syndrome.empty:
        return CorrectionOutcome(syndrome, Branch.UNCORRECTABLE, IDENTITY_FRAME, None, duration)
    records = _run_on_data(syndrome.post_state, FOLD, noise)
    return _data_outcome(syndrome, Branch.UNCORRECTABLE, records[()], duration)


def resolve_pauli_frame(outcome: CorrectionOutcome) -> DensityMatrix:
    if outcome.post_state is None:
        raise ValueError("Cannot resolve the frame of an empty outcome.")
    if outcome.pauli_frame.is_identity:
        return outcome.post_state
    return DensityMatrix(conjugate(outcome.post_state.matrix, outcome.pauli_frame.operator()))


def _dispatch(
    syndrome: SyndromeOutcome, p: float, noise: GateNoise | None, delta_p: float
) -> list[CorrectionOutcome]:
    if syndrome.key == (0, 0):
        return no_decay_outcomes(syndrome, p, noise, delta_p)
    if syndrome.key == (1, 0):
        return correct_single_decay(syndrome, 12, p, noise, delta_p)
    if syndrome.key == (0, 1):
        return correct_single_decay(syndrome, 34, p, noise, delta_p)
    return [correct_uncorrectable(syndrome, noise)]


def full_correction(
    rho: DensityMatrix,
    p: float,
    noise: GateNoise | None = None,
    mode: Mode = "deterministic",
    rng: np.random.Generator | None = None,
    abort_policy: AbortPolicy = "keep",
    delta_p: float = 0.0,
) -> tuple[DensityMatrix, CorrectionStatistics]:
    """One correction round: syndrome, dispatch, recombine or sample.

    Deterministic mode returns the branch-weighted mixture of every
    frame-resolved outcome. Trajectory mode samples one syndrome and one
    ancilla record from ``rng`` and returns that conditional state.
    With ``abort_policy="discard"`` filter aborts are dropped and the
    remaining weight is renormalized.
    """
    if not 0.0 <= p < MAX_DECAY_PROBABILITY:
        raise ValueError(f"Decay probability must lie in [0, 0.5), got {p}.")
    if abort_policy not in ("keep", "discard"):
        raise ValueError(f"Unknown abort policy {abort_policy!r}.")
    if mode == "trajectory":
        if rng is None:
            raise ValueError("Trajectory mode needs an explicit random generator.")
        return _sample_correction(rho, p, noise, rng, abort_policy, delta_p)
    if mode != "deterministic":
        raise ValueError(f"Unknown correction mode {mode!r}.")

    stats = CorrectionStatistics()
    total = np.zeros((16, 16), dtype=complex)
    for syndrome in extract_syndrome(rho, noise):
        if syndrome.empty:
            continue
        for outcome in _dispatch(syndrome, p, noise, delta_p):
            if outcome.post_state is None:
                continue
            weight = syndrome.probability * outcome.probability
            if outcome.branch is Branch.FILTER_ABORT and abort_policy == "discard":
                stats.discarded += weight
                stats.weights[Branch.FILTER_ABORT] += weight
                continue
            stats.add(outcome, weight)
            total += weight * resolve_pauli_frame(outcome).matrix

    kept = float(np.real(np.trace(total)))
    if kept <= 0:
        raise NumericalError(
            "Every correction branch was discarded.", {"discarded": stats.discarded}
        )
    return DensityMatrix(total / kept), stats


def _sample_correction(
    rho: DensityMatrix,
    p: float,
    noise: GateNoise | None,
    rng: np.random.Generator,
    abort_policy: AbortPolicy,
    delta_p: float,
) -> tuple[DensityMatrix, CorrectionStatistics]:
    stats = CorrectionStatistics()
    syndromes = extract_syndrome(rho, noise)
    probabilities = np.array([s.probability for s in syndromes])
    for _ in range(100):
        syndrome = syndromes[rng.choice(len(syndromes), p=probabilities / probabilities.sum())]
        outcomes = [o for o in _dispatch(syndrome, p, noise, delta_p) if o.post_state is not None]
        weights = np.array([o.probability for o in outcomes])
        outcome = outcomes[rng.choice(len(outcomes), p=weights / weights.sum())]
        if outcome.branch is Branch.FILTER_ABORT and abort_policy == "discard":
            # post-selection: the shot is repeated from the same input
            stats.discarded += 1.0
            continue
        stats.add(outcome, 1.0)
        return resolve_pauli_frame(outcome), stats
    raise NumericalError("Filter aborted on 100 consecutive resamples.", {"p": p})


# --- Recovery analysis ---


@dataclass(frozen=True, eq=False)
class OperatorRecovery:
    pattern: str
    lam: float
    distortion_norm: float
    recovery_unitary: np.ndarray


@dataclass(frozen=True, eq=False)
class RecoveryAnalysis:
    operators: dict[str, OperatorRecovery]
    fidelity_bound: float

    def __getitem__(self, pattern: str) -> OperatorRecovery:
        return self.operators[pattern]


# Condition number above which a non-vanishing projected operator is degenerate.
DEGENERACY_CONDITION = 1e12
VANISHING_NORM = 1e-14


def _completed_unitary(image: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Full unitary sending the codewords to ``image``'s columns.

    The complements are paired arbitrarily; only the codespace action matters.
    """
    source = np.hstack([basis, scipy.linalg.null_space(basis.conj().T)])
    target = np.hstack([image, scipy.linalg.null_space(image.conj().T)])
    return target @ source.conj().T


def recovery_analysis(channel: KrausChannel, code: CodeSpec | None = None) -> RecoveryAnalysis:
    """Polar-decomposition analysis of the correctable damping operators.

    For each ``K_s`` with at most one decay, ``K_s Π = U_s (√λ_s + Q_s) Π``
    where ``λ_s`` is the smallest eigenvalue of ``Π K_s† K_s Π``. The sum of
    the ``λ_s`` lower-bounds the recovered fidelity.
    """
    code = code or four_qubit_code()
    correctable = first_order_operators(channel)
    basis = code.basis()
    entries: dict[str, OperatorRecovery] = {}
    for pattern, operator in zip(correctable.patterns, correctable.operators):
        image = operator @ basis
        norm = float(np.linalg.norm(image, 2))
        if norm <= VANISHING_NORM:
            entries[pattern] = OperatorRecovery(pattern, 0.0, 0.0, np.eye(16, dtype=complex))
            continue
        gram = image.conj().T @ image
        eigenvalues = np.linalg.eigvalsh(gram)
        condition = float(eigenvalues[-1] / max(eigenvalues[0], np.finfo(float).tiny))
        if eigenvalues[0] <= 0 or condition > DEGENERACY_CONDITION:
            raise NumericalError(
                f"Damping operator {pattern} collapses the codespace.",
                {"condition": condition, "norm": norm, "lambda_min": float(eigenvalues[0])},
            )
        isometry, positive = scipy.linalg.polar(image)
        lam = float(eigenvalues[0])
        distortion = positive - math.sqrt(lam) * np.eye(2)
        entries[pattern] = OperatorRecovery(
            pattern=pattern,
            lam=lam,
            distortion_norm=float(np.linalg.norm(distortion, 2)),
            recovery_unitary=_completed_unitary(isometry, basis).conj().T,
        )
    bound = sum(entry.lam for entry in entries.values())
    return RecoveryAnalysis(operators=entries, fidelity_bound=min(bound, 1.0))


def logical_bloch_vector(rho: DensityMatrix) -> np.ndarray:
    """Expectations of (X̄, Ȳ, Z̄) on a 4-qubit state."""
    code = four_qubit_code()
    logical_y = 1j * code.logical_x @ code.logical_z
    return np.array(
        [
            float(np.real(np.trace(op @ rho.matrix)))
            for op in (code.logical_x, logical_y, code.logical_z)
        ]
    )


def stabilizer_expectations(rho: DensityMatrix) -> dict[str, float]:
    return {
        label: float(np.real(np.trace(op @ rho.matrix)))
        for label, op in four_qubit_code().stabilizers.items()
    }

