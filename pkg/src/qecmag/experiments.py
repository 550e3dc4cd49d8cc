"""Repeated damping-and-correction protocols and their rate analysis.

A round is: free evolution under the signal Hamiltonian for ``tau_ec``
(optionally split into ``substeps`` slices, each followed by damping at the
slice probability), then one :func:`~qecmag.aqec4.full_correction` with
gate noise. Series are sampled at ``t = 0`` and after every correction.

Observables:

    fidelity     overlap with the encoded initial state
    tracked      overlap with the ideally rotated initial state
    population   overlap with |0̄⟩ (Ramsey readout)

Every series also carries the code population tr(Πρ); rate fits use the
logical coherence ``2F - tr(Πρ)``.

Trajectory mode draws one ``numpy`` generator per shot from
``SeedSequence(seed).spawn(n_runs)`` and writes each shot into its own row,
so results do not depend on the worker count.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from contextlib import AbstractContextManager, nullcontext
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np
import scipy.optimize
import scipy.stats

from qecmag.aqec4 import encode, four_qubit_code, full_correction, logical_state
from qecmag.channels import DampingParams, damping_channel
from qecmag.circuits import GateNoise
from qecmag.coupler import CouplerParams, signal_hamiltonian
from qecmag.qstate import DensityMatrix, NumericalError, PureState, unitary_from_hamiltonian

logger = logging.getLogger(__name__)

Observable = Literal["fidelity", "tracked", "population"]
# Called with the (row, column) values of a sweep cell.
ProgressHook = Callable[[float, float], AbstractContextManager]

MODES = ("deterministic", "trajectory")
ABORT_POLICIES = {"continue_uncorrected": "keep", "discard_shot": "discard"}
DEFAULT_XI = 8.4
CONFIDENCE = 0.95
# Linearity below this R² triggers a warning in fit_xi.
XI_MIN_R_SQUARED = 0.9
# Largest g_s·tau_ec treated as a small dephasing angle.
SMALL_ANGLE = 0.3


class FitError(NumericalError):
    """A rate fit had too little usable data."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One protocol setting. Times in μs, rates in 1/μs (angular for ``g_s``)."""

    gamma: float = 1.0
    tau_ec: float = 0.05
    p_gate: float = 0.0
    g_s: float = 0.0
    total_time: float = 1.0
    n_runs: int = 1
    seed: int = 0
    mode: str = "deterministic"
    abort_policy: str = "continue_uncorrected"
    substeps: int = 1
    delta_p: float = 0.0
    initial: str = "plus"
    record_within_round: bool = False
    workers: int = 1
    swap_faults: bool = False
    readout_faults: bool = False
    coupler: CouplerParams | None = None
    name: str = "default"

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}.")
        if self.tau_ec <= 0:
            raise ValueError(f"tau_ec must be positive, got {self.tau_ec}.")
        if self.total_time < self.tau_ec:
            raise ValueError(
                f"total_time {self.total_time} is shorter than one interval {self.tau_ec}."
            )
        if not 0.0 <= self.p_gate <= 1.0:
            raise ValueError(f"p_gate must lie in [0, 1], got {self.p_gate}.")
        if self.n_runs < 1:
            raise ValueError(f"n_runs must be at least 1, got {self.n_runs}.")
        if self.substeps < 1:
            raise ValueError(f"substeps must be at least 1, got {self.substeps}.")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}.")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}.")
        if self.abort_policy not in ABORT_POLICIES:
            raise ValueError(
                f"abort_policy must be one of {tuple(ABORT_POLICIES)}, got {self.abort_policy!r}."
            )
        if self.p >= 0.5:
            raise ValueError(f"Decay probability per interval {self.p:.3g} is not below 0.5.")
        logical_state(self.initial)

    @property
    def damping(self) -> DampingParams:
        return DampingParams(self.gamma, self.tau_ec)

    @property
    def p(self) -> float:
        return -math.expm1(-self.gamma * self.tau_ec)

    @property
    def rounds(self) -> int:
        return int(math.floor(self.total_time / self.tau_ec + 1e-9))

    @property
    def noise(self) -> GateNoise | None:
        if self.p_gate <= 0:
            return None
        return GateNoise(
            self.p_gate, route_swaps=self.swap_faults, readout_faults=self.readout_faults
        )

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    def hamiltonian(self) -> np.ndarray:
        params = self.coupler or CouplerParams(g_prime=0.0, delta=0.0, alpha=0.0)
        params = dataclasses.replace(params, g_s=self.g_s)
        return signal_hamiltonian(params, include_correction=self.coupler is not None)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    label: str
    # Samples taken just before each correction (same instants as ``values``).
    pre_correction: np.ndarray | None = None
    # tr(Π ρ) at the same instants; weight that leaked out of the code is not coherence.
    code_population: np.ndarray | None = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        stderr = np.asarray(self.stderr, dtype=float)
        if not (times.shape == values.shape == stderr.shape) or times.ndim != 1:
            raise ValueError("times, values and stderr must be 1-D arrays of equal length.")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing.")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "stderr", stderr)
        for name in ("pre_correction", "code_population"):
            extra = getattr(self, name)
            if extra is None:
                continue
            extra = np.asarray(extra, dtype=float)
            if extra.shape != times.shape:
                raise ValueError(f"{name} must match times.")
            object.__setattr__(self, name, extra)

    def __len__(self) -> int:
        return len(self.times)

    def value_at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))

    def coherence(self) -> np.ndarray:
        """Logical coherence ``2F - P_code`` (``2F - 1`` without code populations)."""
        population = 1.0 if self.code_population is None else self.code_population
        return 2.0 * self.values - population


@dataclass(frozen=True, slots=True)
class RateFit:
    gamma_eff: float
    ci: tuple[float, float]
    window: tuple[float, float]
    residual: float
    n_points: int


@dataclass(frozen=True, slots=True)
class RamseyFit:
    gamma: float
    omega: float
    gamma_stderr: float
    omega_stderr: float


@dataclass(frozen=True, slots=True)
class XiFit:
    xi: float
    ci: tuple[float, float]
    residual: float
    n_points: int


@dataclass(frozen=True, slots=True)
class SweepPoint:
    tau_ec: float
    p_gate: float
    fit: RateFit | None
    error: str | None = None

    @property
    def gamma_eff(self) -> float:
        return self.fit.gamma_eff if self.fit else math.nan


@dataclass(frozen=True, slots=True)
class ThresholdCell:
    tau_ec: float
    p_gate: float
    gamma_eff: float
    better: bool
    boundary: bool = False

    @property
    def verdict(self) -> str:
        return "better" if self.better else "worse"


@dataclass(frozen=True)
class ThresholdMap:
    cells: list[ThresholdCell]
    simulated_boundary: dict[float, float]
    analytic_boundary: dict[float, float]
    unencoded_rate: float


# --- Simulation ---


def _initial_state(config: ExperimentConfig, initial: str | tuple | PureState | None) -> PureState:
    if initial is None:
        return logical_state(config.initial)
    if isinstance(initial, PureState):
        return initial
    if isinstance(initial, str):
        return logical_state(initial)
    return encode(*initial)


def _overlap(matrix: np.ndarray, vector: np.ndarray) -> float:
    return float(np.real(np.vdot(vector, matrix @ vector)))


def _population(matrix: np.ndarray, projector: np.ndarray) -> float:
    return float(np.real(np.trace(projector @ matrix)))


def _targets(
    config: ExperimentConfig, psi: PureState, signal_on: bool, observable: Observable
) -> list[np.ndarray]:
    times = [k * config.tau_ec for k in range(config.rounds + 1)]
    if observable == "fidelity":
        return [psi.amplitudes] * len(times)
    if observable == "population":
        return [four_qubit_code().zero.amplitudes] * len(times)
    if observable == "tracked":
        if not signal_on:
            return [psi.amplitudes] * len(times)
        hamiltonian = config.hamiltonian()
        return [unitary_from_hamiltonian(hamiltonian, t) @ psi.amplitudes for t in times]
    raise ValueError(f"Unknown observable {observable!r}.")


def _simulate(
    config: ExperimentConfig,
    psi: PureState,
    signal_on: bool,
    observable: Observable,
    rng: np.random.Generator | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    slice_time = config.tau_ec / config.substeps
    unitary = (
        unitary_from_hamiltonian(config.hamiltonian(), slice_time)
        if signal_on and config.g_s != 0
        else None
    )
    slice_p = -math.expm1(-config.gamma * slice_time)
    damping = damping_channel(slice_p, 4).pruned().operators
    targets = _targets(config, psi, signal_on, observable)
    mode = "trajectory" if rng is not None else "deterministic"

    code = four_qubit_code().projector()
    values = np.empty(config.rounds + 1)
    pre = np.empty(config.rounds + 1)
    population = np.empty(config.rounds + 1)
    rho = psi.projector()
    values[0] = pre[0] = _overlap(rho, targets[0])
    population[0] = _population(rho, code)
    for k in range(1, config.rounds + 1):
        for _ in range(config.substeps):
            if unitary is not None:
                rho = unitary @ rho @ unitary.conj().T
            rho = sum(op @ rho @ op.conj().T for op in damping)
        pre[k] = _overlap(rho, targets[k])
        corrected, _ = full_correction(
            DensityMatrix(rho),
            config.p,
            noise=config.noise,
            mode=mode,
            rng=rng,
            abort_policy=ABORT_POLICIES[config.abort_policy],
            delta_p=config.delta_p,
        )
        rho = corrected.matrix
        values[k] = _overlap(rho, targets[k])
        population[k] = _population(rho, code)
    return values, pre, population


def run_cycles(
    config: ExperimentConfig,
    initial: str | tuple | PureState | None = None,
    signal_on: bool = False,
    observable: Observable = "fidelity",
) -> TimeSeries:
    """Simulate ``config.rounds`` correction rounds and sample ``observable``."""
    psi = _initial_state(config, initial)
    times = config.tau_ec * np.arange(config.rounds + 1)
    label = f"{config.name}:{observable}"
    logger.debug(
        "run_cycles %s: %d rounds, p=%.3g, p_gate=%.3g, mode=%s",
        config.name,
        config.rounds,
        config.p,
        config.p_gate,
        config.mode,
    )

    if config.mode == "deterministic":
        values, pre, population = _simulate(config, psi, signal_on, observable, None)
        stderr = np.zeros_like(values)
    else:
        seeds = np.random.SeedSequence(config.seed).spawn(config.n_runs)
        shots = np.empty((config.n_runs, config.rounds + 1))
        pre_shots = np.empty_like(shots)
        population_shots = np.empty_like(shots)

        def run_shot(index: int) -> None:
            rng = np.random.default_rng(seeds[index])
            shots[index], pre_shots[index], population_shots[index] = _simulate(
                config, psi, signal_on, observable, rng
            )

        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                list(pool.map(run_shot, range(config.n_runs)))
        else:
            for index in range(config.n_runs):
                run_shot(index)
        values = shots.mean(axis=0)
        pre = pre_shots.mean(axis=0)
        population = population_shots.mean(axis=0)
        if config.n_runs > 1:
            stderr = shots.std(axis=0, ddof=1) / math.sqrt(config.n_runs)
        else:
            stderr = np.zeros_like(values)

    return TimeSeries(
        times=times,
        values=values,
        stderr=stderr,
        label=label,
        pre_correction=pre if config.record_within_round else None,
        code_population=population,
    )


def ramsey(config: ExperimentConfig) -> TimeSeries:
    """Population of |0̄⟩ with the signal on, starting from |0̄⟩."""
    return run_cycles(config, initial="zero", signal_on=True, observable="population")


def unencoded_reference(gamma: float, times: Sequence[float]) -> TimeSeries:
    """Fidelity of a bare damped |+⟩: ``(1 + e^{-γt/2}) / 2``."""
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}.")
    times = np.asarray(times, dtype=float)
    values = 0.5 * (1.0 + np.exp(-0.5 * gamma * times))
    return TimeSeries(times, values, np.zeros_like(times), "unencoded")


def unencoded_ramsey(gamma: float, g_s: float, times: Sequence[float]) -> TimeSeries:
    """Bare-qubit fringe ``(1 + e^{-γt/2} cos 2g t) / 2``."""
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}.")
    times = np.asarray(times, dtype=float)
    values = 0.5 * (1.0 + np.exp(-0.5 * gamma * times) * np.cos(2.0 * g_s * times))
    return TimeSeries(times, values, np.zeros_like(times), "unencoded_ramsey")


# --- Fits ---


def fit_gamma_eff(
    series: TimeSeries, skip_rounds: int = 2, floor: float = 0.1, min_points: int = 10
) -> RateFit:
    """Fit the log of the logical coherence (:meth:`TimeSeries.coherence`) against time.

    The window starts after ``skip_rounds`` samples and ends before the
    coherence first drops below ``floor``. Weight outside the code counts as
    lost coherence, not as a flipped logical state.

    Raises:
        FitError: If fewer than ``min_points`` samples remain.
    """
    coherence = series.coherence()
    below = np.nonzero(coherence < floor)[0]
    stop = int(below[0]) if below.size else len(series)
    times = series.times[skip_rounds:stop]
    usable = coherence[skip_rounds:stop]
    if len(usable) < min_points:
        raise FitError(
            f"Only {len(usable)} usable samples in {series.label} (need {min_points}).",
            {"usable": float(len(usable)), "total": float(len(series)), "floor": floor},
        )

    log_coherence = np.log(usable)
    regression = scipy.stats.linregress(times, log_coherence)
    gamma_eff = -float(regression.slope)
    if gamma_eff < 0:
        logger.warning("Coherence grows in %s (slope %.3g); clamping to 0", series.label, gamma_eff)
        gamma_eff = 0.0
    t_crit = float(scipy.stats.t.ppf(0.5 + CONFIDENCE / 2, len(times) - 2))
    half_width = t_crit * float(regression.stderr)
    predicted = regression.intercept + regression.slope * times
    residual = float(np.sqrt(np.mean((log_coherence - predicted) ** 2)))
    return RateFit(
        gamma_eff=gamma_eff,
        ci=(gamma_eff - half_width, gamma_eff + half_width),
        window=(float(times[0]), float(times[-1])),
        residual=residual,
        n_points=len(times),
    )


def _ramsey_model(t: np.ndarray, gamma: float, omega: float) -> np.ndarray:
    return 0.5 * (1.0 + np.exp(-gamma * t) * np.cos(omega * t))


def fit_ramsey(series: TimeSeries, omega_guess: float | None = None) -> RamseyFit:
    """Least-squares fit of ``(1 + e^{-Γt} cos ωt) / 2``."""
    if len(series) < 4:
        raise FitError(f"Ramsey fit needs at least 4 samples, got {len(series)}.")
    if omega_guess is None:
        spectrum = np.abs(np.fft.rfft(series.values - series.values.mean()))
        frequencies = np.fft.rfftfreq(len(series), d=float(np.mean(np.diff(series.times))))
        omega_guess = 2 * math.pi * float(frequencies[int(np.argmax(spectrum[1:])) + 1])
    span = float(series.times[-1] - series.times[0])
    try:
        parameters, covariance = scipy.optimize.curve_fit(
            _ramsey_model,
            series.times,
            series.values,
            p0=(1.0 / span, omega_guess),
            bounds=((0.0, 0.0), (np.inf, np.inf)),
        )
    except (RuntimeError, ValueError) as error:
        raise FitError(f"Ramsey fit did not converge for {series.label}: {error}") from error
    errors = np.sqrt(np.diag(covariance))
    return RamseyFit(
        gamma=float(parameters[0]),
        omega=float(parameters[1]),
        gamma_stderr=float(errors[0]),
        omega_stderr=float(errors[1]),
    )


def fit_xi(points: Sequence[SweepPoint], gamma: float, baseline: str = "analytic") -> XiFit:
    """Slope of ``Γ_eff - baseline`` against ``p_gate / tau_ec`` through the origin.

    ``baseline="analytic"`` subtracts ``4γ²τ``; ``"measured"`` subtracts the
    fitted ``p_gate = 0`` rate at the same ``tau_ec``.
    """
    fitted = [point for point in points if point.fit is not None]
    if baseline == "analytic":
        offsets = {point.tau_ec: 4.0 * gamma**2 * point.tau_ec for point in fitted}
    elif baseline == "measured":
        offsets = {point.tau_ec: point.gamma_eff for point in fitted if point.p_gate == 0}
    else:
        raise ValueError(f"Unknown baseline {baseline!r}.")

    pairs = [
        (point.p_gate / point.tau_ec, point.gamma_eff - offsets[point.tau_ec])
        for point in fitted
        if point.tau_ec in offsets
    ]
    if len(pairs) < 2:
        raise FitError(f"fit_xi needs at least 2 fitted points, got {len(pairs)}.")
    x = np.array([pair[0] for pair in pairs])
    y = np.array([pair[1] for pair in pairs])
    sxx = float(np.dot(x, x))
    if sxx == 0:
        logger.info("All sweep points have p_gate = 0; ξ is 0")
        return XiFit(xi=0.0, ci=(0.0, 0.0), residual=0.0, n_points=len(pairs))

    xi = float(np.dot(x, y) / sxx)
    residuals = y - xi * x
    dof = max(len(pairs) - 1, 1)
    stderr = math.sqrt(float(np.dot(residuals, residuals)) / dof / sxx)
    half_width = float(scipy.stats.t.ppf(0.5 + CONFIDENCE / 2, dof)) * stderr
    total = float(np.dot(y, y))
    r_squared = 1.0 - float(np.dot(residuals, residuals)) / total if total > 0 else 1.0
    if r_squared < XI_MIN_R_SQUARED:
        logger.warning("ξ fit is poorly linear (R² = %.3f)", r_squared)
    return XiFit(
        xi=xi, ci=(xi - half_width, xi + half_width), residual=r_squared, n_points=len(pairs)
    )


# --- Sweeps ---


def _step(progress: ProgressHook | None, row: float, column: float) -> AbstractContextManager:
    return progress(row, column) if progress else nullcontext()


def _report(tile, rate: float | None = None, error: str | None = None) -> None:
    """Hand a cell result to the progress grid, if one is attached."""
    if tile is not None:
        tile.gamma_eff, tile.error = rate, error


def gamma_eff_sweep(
    config: ExperimentConfig,
    tau_values: Sequence[float],
    p_gate_values: Sequence[float],
    progress: ProgressHook | None = None,
) -> list[SweepPoint]:
    """Fit the logical coherence rate of |+̄⟩ on every (tau_ec, p_gate) cell."""
    points = []
    for tau in tau_values:
        for p_gate in p_gate_values:
            setting = config.replace(tau_ec=tau, p_gate=p_gate, initial="plus")
            with _step(progress, tau, p_gate) as tile:
                series = run_cycles(setting)
                try:
                    fit = fit_gamma_eff(series)
                except FitError as error:
                    logger.warning("Fit failed at tau_ec=%g, p_gate=%g: %s", tau, p_gate, error)
                    points.append(SweepPoint(tau, p_gate, None, str(error)))
                    _report(tile, error=str(error))
                else:
                    points.append(SweepPoint(tau, p_gate, fit))
                    _report(tile, fit.gamma_eff)
    return points


def finite_tau_dephasing(
    config: ExperimentConfig,
    tau_values: Sequence[float],
    substeps: int,
    progress: ProgressHook | None = None,
) -> TimeSeries:
    """Extra coherence rate from decays landing mid-interval.

    For each ``tau_ec`` the tracked fidelity of |0̄⟩ is fitted with the
    signal on and with ``g_s = 0``, both with ``substeps`` damping slices and
    no gate noise; the returned series holds their difference against
    ``tau_ec``. Progress cells are keyed ``(tau_ec, g_s)``.
    """
    if substeps < 2:
        raise ValueError("finite_tau_dephasing needs at least 2 substeps.")
    rates, errors = [], []
    for tau in tau_values:
        if abs(config.g_s) * tau > SMALL_ANGLE:
            logger.warning(
                "g_s·tau_ec = %.3g is not small; the quadratic law may not hold",
                abs(config.g_s) * tau,
            )
        fits = []
        for g_s in (config.g_s, 0.0):
            setting = config.replace(
                tau_ec=tau, p_gate=0.0, g_s=g_s, substeps=substeps, initial="zero"
            )
            with _step(progress, tau, g_s) as tile:
                fit = fit_gamma_eff(run_cycles(setting, signal_on=True, observable="tracked"))
                _report(tile, fit.gamma_eff)
            fits.append(fit)
        signal, baseline = fits
        rates.append(signal.gamma_eff - baseline.gamma_eff)
        errors.append(
            math.hypot(signal.ci[1] - signal.gamma_eff, baseline.ci[1] - baseline.gamma_eff)
        )
    return TimeSeries(
        times=np.asarray(tau_values, dtype=float),
        values=np.asarray(rates),
        stderr=np.asarray(errors) / scipy.stats.norm.ppf(0.5 + CONFIDENCE / 2),
        label=f"finite_tau_dephasing(substeps={substeps})",
    )


def analytic_threshold(gamma: float, tau_ec: float, xi: float = DEFAULT_XI) -> float:
    """``p_gate*`` solving ``4γ²τ + ξ p / τ = γ / 2`` (0 when no gate error is tolerable)."""
    if xi <= 0:
        raise ValueError(f"xi must be positive, got {xi}.")
    return max((0.5 * gamma - 4.0 * gamma**2 * tau_ec) * tau_ec / xi, 0.0)


def _fallback_rate(series: TimeSeries) -> float:
    """Rate implied by the last sample when a fit is impossible."""
    coherence = float(series.coherence()[-1])
    if coherence <= 0:
        return math.inf
    return -math.log(coherence) / float(series.times[-1])


def threshold_map(
    config: ExperimentConfig,
    tau_values: Sequence[float],
    p_gate_values: Sequence[float],
    xi: float = DEFAULT_XI,
    progress: ProgressHook | None = None,
) -> ThresholdMap:
    """Classify each cell as better or worse than the bare rate γ/2."""
    unencoded_rate = 0.5 * config.gamma
    cells: list[ThresholdCell] = []
    simulated: dict[float, float] = {}
    p_sorted = sorted(p_gate_values)
    for tau in tau_values:
        column = []
        for p_gate in p_sorted:
            setting = config.replace(tau_ec=tau, p_gate=p_gate, initial="plus")
            with _step(progress, tau, p_gate) as tile:
                series = run_cycles(setting)
                try:
                    rate = fit_gamma_eff(series).gamma_eff
                except FitError:
                    rate = _fallback_rate(series)
                _report(tile, rate)
            column.append(ThresholdCell(tau, p_gate, rate, rate < unencoded_rate))

        crossing = next(
            (i for i in range(1, len(column)) if column[i - 1].better and not column[i].better),
            None,
        )
        if crossing is None:
            simulated[tau] = p_sorted[-1] if all(c.better for c in column) else math.nan
        else:
            below, above = column[crossing - 1], column[crossing]
            column[crossing - 1] = dataclasses.replace(below, boundary=True)
            simulated[tau] = _interpolate_boundary(below, above, unencoded_rate)
        cells.extend(column)

    analytic = {tau: analytic_threshold(config.gamma, tau, xi) for tau in tau_values}
    return ThresholdMap(cells, simulated, analytic, unencoded_rate)


def _interpolate_boundary(
    below: ThresholdCell, above: ThresholdCell, unencoded_rate: float
) -> float:
    """Linear interpolation of the crossing in p_gate (log p when both are positive)."""
    if not math.isfinite(above.gamma_eff) or above.gamma_eff == below.gamma_eff:
        return above.p_gate
    fraction = (unencoded_rate - below.gamma_eff) / (above.gamma_eff - below.gamma_eff)
    if below.p_gate > 0:
        low, high = math.log(below.p_gate), math.log(above.p_gate)
        return math.exp(low + fraction * (high - low))
    return below.p_gate + fraction * (above.p_gate - below.p_gate)
