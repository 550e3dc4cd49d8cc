"""Field resolution and correction-round timing.

Sensitivity arithmetic is in SI: rates in 1/s, times in s, fields in T.
Responsivities arrive from :mod:`qecmag.coupler` in angular MHz per tesla
and are converted here.

The fringe is read at quadrature (``cos 2g t = 0``, ``P = 1/2``) with
projection noise ``δP = sqrt(P(1 - P) t / T)``. The optimal single-shot
evolution time is ``t* = 1 / (2Γ)``; at ``t*`` the Ramsey resolution is
``sqrt(2eΓ/T) / (2|dg/dB|)``, half of :func:`sensitivity`, which reports the
conventional figure without that factor.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np
import scipy.constants
import scipy.optimize

from qecmag.aqec4 import Branch, correction_circuit, syndrome_circuit
from qecmag.circuits import (
    LINEAR_CHAIN,
    CircuitCost,
    Gate,
    TimingModel,
    circuit_cost,
)

logger = logging.getLogger(__name__)

MHZ = 1e6
GRID_POINTS = 10_000
# Search window for Γt in the optimal-time minimisation.
GAMMA_T_BOUNDS = (1e-6, 10.0)

T2Convention = Literal["t2", "t1"]


@dataclass(frozen=True, slots=True)
class SensitivityInputs:
    """``gamma_eff`` in 1/s, ``responsivity`` in rad/μs per T, ``total_time`` in s."""

    gamma_eff: float
    responsivity: float
    total_time: float

    def __post_init__(self) -> None:
        if self.gamma_eff < 0:
            raise ValueError(f"gamma_eff must be non-negative, got {self.gamma_eff}.")
        if self.responsivity < 0:
            raise ValueError(f"responsivity must be non-negative, got {self.responsivity}.")
        if self.total_time <= 0:
            raise ValueError(f"total_time must be positive, got {self.total_time}.")

    @property
    def responsivity_si(self) -> float:
        """|dg/dB| in rad/s per T."""
        return self.responsivity * MHZ


@dataclass(frozen=True, slots=True)
class SensitivityReport:
    delta_b: float
    per_root_hz: float
    infinite: bool
    inputs: SensitivityInputs

    def as_record(self) -> dict[str, float | bool]:
        return {
            "delta_b": self.delta_b,
            "delta_b_per_root_hz": self.per_root_hz,
            "infinite": self.infinite,
            "gamma_eff": self.inputs.gamma_eff,
            "responsivity": self.inputs.responsivity,
            "total_time": self.inputs.total_time,
        }


def sensitivity(inputs: SensitivityInputs) -> SensitivityReport:
    """``δB = sqrt(2eΓ/T) / |dg/dB|`` and the per-root-hertz ``sqrt(2eΓ) / |dg/dB|``."""
    if inputs.responsivity == 0:
        logger.warning("Zero responsivity: the sensor does not see the field")
        return SensitivityReport(math.inf, math.inf, True, inputs)
    numerator = math.sqrt(2 * math.e * inputs.gamma_eff)
    return SensitivityReport(
        delta_b=numerator / math.sqrt(inputs.total_time) / inputs.responsivity_si,
        per_root_hz=numerator / inputs.responsivity_si,
        infinite=False,
        inputs=inputs,
    )


def h_normalized_sensitivity(
    dE_dphi: float, area: float, gamma_eff: float, total_time: float
) -> float:
    """``δB = h / (|dE/dΦ| A) · sqrt(2eΓ/T)``.

    ``dE_dphi`` is in J/Wb, ``area`` in m², ``gamma_eff`` in 1/s and
    ``total_time`` in s. The result is in T.
    """
    if area <= 0 or total_time <= 0:
        raise ValueError("area and total_time must be positive.")
    if dE_dphi == 0:
        return math.inf
    prefactor = scipy.constants.h / (abs(dE_dphi) * area)
    return prefactor * math.sqrt(2 * math.e * gamma_eff / total_time)


def ramsey_resolution(t: float, inputs: SensitivityInputs) -> float:
    """Single-setting resolution after evolution time ``t`` (s) at quadrature."""
    if t <= 0:
        raise ValueError(f"Evolution time must be positive, got {t}.")
    if inputs.responsivity == 0:
        return math.inf
    population = 0.5
    noise = math.sqrt(population * (1 - population) * t / inputs.total_time)
    slope = t * math.exp(-inputs.gamma_eff * t) * inputs.responsivity_si
    return noise / slope


@dataclass(frozen=True, slots=True)
class OptimalTime:
    t_star: float
    closed_form: float
    grid_estimate: float

    @property
    def relative_gap(self) -> float:
        return abs(self.t_star - self.closed_form) / self.closed_form


def optimal_time(gamma_eff: float) -> OptimalTime:
    """Minimise the Ramsey resolution over the evolution time.

    The objective ``Γt - ln(t)/2`` is the logarithm of the resolution up to
    constants. A bounded scalar search is cross-checked against a uniform
    grid.
    """
    if gamma_eff <= 0:
        raise ValueError(f"gamma_eff must be positive, got {gamma_eff}.")

    def log_resolution(x: float) -> float:
        return x - 0.5 * math.log(x)

    result = scipy.optimize.minimize_scalar(
        log_resolution, bounds=GAMMA_T_BOUNDS, method="bounded", options={"xatol": 1e-10}
    )
    grid = np.linspace(GAMMA_T_BOUNDS[0], GAMMA_T_BOUNDS[1], GRID_POINTS)
    grid_x = float(grid[np.argmin(grid - 0.5 * np.log(grid))])
    report = OptimalTime(
        t_star=float(result.x) / gamma_eff,
        closed_form=1.0 / (2.0 * gamma_eff),
        grid_estimate=grid_x / gamma_eff,
    )
    grid_step = (GAMMA_T_BOUNDS[1] - GAMMA_T_BOUNDS[0]) / GRID_POINTS / gamma_eff
    if abs(report.t_star - report.grid_estimate) > 2 * grid_step:
        logger.warning(
            "Optimal time search and grid disagree: %.6g vs %.6g",
            report.t_star,
            report.grid_estimate,
        )
    return report


def coherence_rate(time: float, convention: T2Convention = "t2") -> float:
    """Coherence decay rate from ``T2`` (``"t2"``) or from ``T1`` with ``T2 = 2T1``."""
    if time <= 0:
        raise ValueError(f"Coherence time must be positive, got {time}.")
    if convention == "t2":
        return 1.0 / time
    if convention == "t1":
        return 1.0 / (2.0 * time)
    raise ValueError(f"Unknown T2 convention {convention!r}.")


# --- Timing ---


def correction_duration(
    circuit: Iterable[Gate],
    timing: TimingModel | None = None,
    layout: Sequence[int] = LINEAR_CHAIN,
) -> CircuitCost:
    """Serial duration (μs) and two-qubit counts of a correction circuit."""
    return circuit_cost(circuit, timing, layout)


def worst_case_round(timing: TimingModel | None = None) -> CircuitCost:
    """Slowest full round: syndrome extraction plus the slowest corrector."""
    costs = [
        correction_duration(syndrome_circuit() + correction_circuit(branch, p=0.01), timing)
        for branch in (Branch.NO_DECAY, Branch.DECAY_Q1_OR_Q2, Branch.DECAY_Q3_OR_Q4)
    ]
    return max(costs, key=lambda cost: cost.duration)
