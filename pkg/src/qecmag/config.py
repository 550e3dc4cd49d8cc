"""Configuration management for qecmag.

Run configs are YAML files deep-merged over :func:`default_config`.
Physical quantities may carry a unit suffix, resolved once at load time:

    physics:
      gamma: 1.0               # 1/μs
      tau_ec: 0.05 /gamma      # time in units of 1/γ
      p_gate: 0.01 %           # probability in percent
      g_s: 10 gamma            # rate in units of γ
    sensing:
      t2: 40 us
      total_time: 1 s

Bare numbers are internal units: μs, angular MHz (rad/μs), μm².
Any problem is a :class:`ConfigError` carrying the YAML line of the node.
"""

from __future__ import annotations

import copy
import dataclasses
import logging
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from qecmag.coupler import CouplerParams, flux_responsivity
from qecmag.experiments import DEFAULT_XI, ExperimentConfig
from qecmag.sensing import coherence_rate

logger = logging.getLogger(__name__)

LOG_LEVEL_ENVIRONMENT = "QECMAG_LOG_LEVEL"
MICROSECONDS_PER_SECOND = 1e6
SECTIONS = ("physics", "protocol", "coupler", "sensing", "sweep", "parameter_sets", "settings")

TIME_UNITS = {"ns": 1e-3, "us": 1.0, "μs": 1.0, "ms": 1e3, "s": 1e6}
RATE_UNITS = {"/us": 1.0, "MHz": 1.0, "/ms": 1e-3, "/s": 1e-6}
AREA_UNITS = {"um2": 1.0, "μm2": 1.0, "mm2": 1e6, "m2": 1e12}

_QUANTITY = re.compile(r"^\s*([-+0-9.eE]+)\s*(\S+)?\s*$")

PHYSICS_KINDS = {
    "gamma": "rate",
    "tau_ec": "time",
    "p_gate": "probability",
    "g_s": "rate",
    "total_time": "time",
}
PROTOCOL_KINDS = {
    "mode": "text",
    "n_runs": "integer",
    "seed": "integer",
    "abort_policy": "text",
    "substeps": "integer",
    "delta_p": "probability",
    "initial": "text",
    "record_within_round": "flag",
    "workers": "integer",
    "swap_faults": "flag",
    "readout_faults": "flag",
}
COUPLER_KINDS = {
    "enabled": "flag",
    "g_prime": "rate",
    "delta": "rate",
    "alpha": "rate",
    "dgs_dphi": "rate",
    "area": "area",
    "gamma_rates": "rates",
    "ratio_threshold": "number",
}


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        self.reason = message
        super().__init__(f"line {line}: {message}" if line else message)


def default_config() -> dict[str, Any]:
    """Return a default config structure."""
    return {
        "physics": {
            "gamma": 1.0,
            "tau_ec": "0.05 /gamma",
            "p_gate": 0.0,
            "g_s": 0.0,
            "total_time": "1 /gamma",
        },
        "protocol": {
            "mode": "deterministic",
            "n_runs": 1,
            "seed": 0,
            "abort_policy": "continue_uncorrected",
            "substeps": 1,
            "delta_p": 0.0,
            "initial": "plus",
            "record_within_round": False,
            "workers": 1,
            # extra faults for routed SWAPs and for prep, reset and readout
            "swap_faults": False,
            "readout_faults": False,
        },
        "coupler": {
            "enabled": False,
            "g_prime": 0.0,
            "delta": 0.0,
            "alpha": 0.0,
            # rad/μs per flux quantum
            "dgs_dphi": 0.0,
            "area": "100 um2",
            "gamma_rates": [0.0, 0.0, 0.0],
            "ratio_threshold": 10.0,
        },
        "sensing": {
            "t2": "40 us",
            "t2_convention": "t2",
            "total_time": "1 s",
            "gamma_eff": None,
            # rad/μs per tesla; taken from the coupler when left empty
            "responsivity": None,
        },
        "sweep": {
            "tau_values": ["0.01 /gamma", "0.02 /gamma", "0.05 /gamma", "0.1 /gamma"],
            "p_gate_values": [0.0, 1e-4, 1e-3],
            "substeps": 8,
            "xi": DEFAULT_XI,
            "xi_baseline": "analytic",
        },
        "parameter_sets": {},
        "settings": {
            "log_level": "INFO",
            "show_progress": True,
        },
    }


# --- YAML plumbing ---


def _line_map(text: str) -> dict[tuple[str, ...], int]:
    """Map every key path of a YAML document to the 1-based line of its value."""
    lines: dict[tuple[str, ...], int] = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines

    def walk(node: yaml.Node, path: tuple[str, ...]) -> None:
        lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                key_path = (*path, str(key_node.value))
                walk(value_node, key_path)
                lines[key_path] = key_node.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode):
            for index, item in enumerate(node.value):
                walk(item, (*path, str(index)))

    if root is not None:
        walk(root, ())
    return lines


def _merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class _Resolver:
    def __init__(self, lines: dict[tuple[str, ...], int]) -> None:
        self.lines = lines

    def line(self, path: tuple[str, ...]) -> int | None:
        while path:
            if path in self.lines:
                return self.lines[path]
            path = path[:-1]
        return None

    def fail(self, path: tuple[str, ...], message: str) -> ConfigError:
        return ConfigError(f"{'.'.join(path)}: {message}", self.line(path))

    def quantity(self, value: Any, kind: str, path: tuple[str, ...], gamma: float | None) -> Any:
        if kind == "text":
            if not isinstance(value, str):
                raise self.fail(path, f"expected text, got {value!r}")
            return value
        if kind == "flag":
            if not isinstance(value, bool):
                raise self.fail(path, f"expected true/false, got {value!r}")
            return value
        if kind == "integer":
            if isinstance(value, bool) or not isinstance(value, int):
                raise self.fail(path, f"expected an integer, got {value!r}")
            return value
        if kind == "rates":
            if not isinstance(value, list) or len(value) != 3:
                raise self.fail(path, "expected three rates [down, dephasing, up]")
            return tuple(
                self.quantity(item, "rate", (*path, str(index)), gamma)
                for index, item in enumerate(value)
            )
        number, unit = self._split(value, path)
        scale = self._scale(kind, unit, path, gamma)
        result = number * scale
        if not math.isfinite(result):
            raise self.fail(path, f"value {value!r} is not finite")
        return result

    def _split(self, value: Any, path: tuple[str, ...]) -> tuple[float, str | None]:
        if isinstance(value, bool):
            raise self.fail(path, f"expected a number, got {value!r}")
        if isinstance(value, (int, float)):
            return float(value), None
        if isinstance(value, str):
            match = _QUANTITY.match(value)
            if match:
                try:
                    return float(match.group(1)), match.group(2)
                except ValueError:
                    pass
        raise self.fail(path, f"cannot read a quantity from {value!r}")

    def _scale(self, kind: str, unit: str | None, path: tuple[str, ...], gamma: float | None):
        if unit is None:
            return 1.0
        if unit == "/gamma" and kind == "time" or unit == "gamma" and kind == "rate":
            if gamma is None:
                raise self.fail(path, f"unit '{unit}' is not allowed here")
            if unit == "/gamma":
                if gamma <= 0:
                    raise self.fail(path, "unit '/gamma' needs a positive gamma")
                return 1.0 / gamma
            return gamma
        table = {
            "time": TIME_UNITS,
            "rate": RATE_UNITS,
            "probability": {"%": 0.01},
            "area": AREA_UNITS,
        }.get(kind, {})
        if unit not in table:
            raise self.fail(path, f"unknown unit '{unit}' for a {kind}")
        return table[unit]

    def section(
        self,
        values: Any,
        kinds: dict[str, str],
        path: tuple[str, ...],
        gamma: float | None,
        nullable: tuple[str, ...] = (),
    ) -> dict[str, Any]:
        if not isinstance(values, dict):
            raise self.fail(path, "expected a mapping")
        unknown = sorted(set(values) - set(kinds))
        if unknown:
            raise self.fail((*path, str(unknown[0])), f"unknown key '{unknown[0]}'")
        resolved = {}
        for key, kind in kinds.items():
            if key not in values:
                continue
            value = values[key]
            if value is None and key in nullable:
                resolved[key] = None
                continue
            resolved[key] = self.quantity(value, kind, (*path, key), gamma)
        return resolved


# --- Resolved config ---


@dataclass(frozen=True)
class SweepConfig:
    tau_values: tuple[float, ...]
    p_gate_values: tuple[float, ...]
    substeps: int = 8
    xi: float = DEFAULT_XI
    xi_baseline: str = "analytic"


@dataclass(frozen=True)
class SensingConfig:
    """Times in s, ``gamma_eff`` in 1/s, ``responsivity`` in rad/μs per T."""

    t2: float
    t2_convention: str = "t2"
    total_time: float = 1.0
    gamma_eff: float | None = None
    responsivity: float | None = None

    def coherence_rate(self) -> float:
        if self.gamma_eff is not None:
            return self.gamma_eff
        return coherence_rate(self.t2, self.t2_convention)


@dataclass
class RunConfig:
    experiments: dict[str, ExperimentConfig]
    sweep: SweepConfig
    sensing: SensingConfig
    settings: dict[str, Any]
    resolved: dict[str, Any] = field(default_factory=dict)
    source: Path | None = None

    @property
    def base(self) -> ExperimentConfig:
        return next(iter(self.experiments.values()))

    def with_overrides(
        self, seed: int | None = None, mode: str | None = None, n_runs: int | None = None
    ) -> RunConfig:
        """Apply CLI overrides to every parameter set and to the resolved record."""
        changes: dict[str, Any] = {}
        if seed is not None:
            changes["seed"] = seed
        if mode is not None:
            changes["mode"] = mode
        if n_runs is not None:
            changes["n_runs"] = n_runs
        if not changes:
            return self
        try:
            experiments = {
                name: experiment.replace(**changes)
                for name, experiment in self.experiments.items()
            }
        except ValueError as error:
            raise ConfigError(f"command-line override: {error}") from error
        resolved = copy.deepcopy(self.resolved)
        resolved["protocol"].update(changes)
        for overrides in resolved.get("parameter_sets", {}).values():
            for key in changes:
                overrides.pop(key, None)
        return dataclasses.replace(self, experiments=experiments, resolved=resolved)


def _experiment(
    name: str,
    physics: dict[str, Any],
    protocol: dict[str, Any],
    coupler: CouplerParams | None,
    line: int | None,
) -> ExperimentConfig:
    try:
        return ExperimentConfig(name=name, coupler=coupler, **physics, **protocol)
    except ValueError as error:
        raise ConfigError(f"{name}: {error}", line) from error


def resolve_config(raw: dict[str, Any], lines: dict[tuple[str, ...], int] | None = None):
    """Validate a merged config mapping and resolve every unit."""
    resolver = _Resolver(lines or {})
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping", resolver.line(()))
    unknown = sorted(set(raw) - set(SECTIONS))
    if unknown:
        raise resolver.fail((unknown[0],), f"unknown section '{unknown[0]}'")

    gamma_raw = raw["physics"].get("gamma") if isinstance(raw["physics"], dict) else None
    gamma = resolver.quantity(gamma_raw, "rate", ("physics", "gamma"), None)
    if gamma < 0:
        raise resolver.fail(("physics", "gamma"), "must be non-negative")
    physics = resolver.section(raw["physics"], PHYSICS_KINDS, ("physics",), gamma)
    protocol = resolver.section(raw["protocol"], PROTOCOL_KINDS, ("protocol",), gamma)

    coupler_values = resolver.section(raw["coupler"], COUPLER_KINDS, ("coupler",), gamma)
    enabled = coupler_values.pop("enabled", False)
    try:
        coupler_params = CouplerParams(g_s=physics["g_s"], **coupler_values)
    except ValueError as error:
        raise ConfigError(str(error), resolver.line(("coupler",))) from error

    resolved = {
        "physics": physics,
        "protocol": protocol,
        "coupler": {"enabled": enabled, **coupler_values},
        "parameter_sets": {},
    }
    resolved["coupler"]["gamma_rates"] = list(coupler_values["gamma_rates"])

    experiments: dict[str, ExperimentConfig] = {}
    parameter_sets = raw.get("parameter_sets") or {}
    if not isinstance(parameter_sets, dict):
        raise resolver.fail(("parameter_sets",), "expected a mapping of name -> overrides")
    set_kinds = {**PHYSICS_KINDS, **PROTOCOL_KINDS}
    for name, overrides in parameter_sets.items():
        path = ("parameter_sets", str(name))
        overrides = overrides or {}
        if not isinstance(overrides, dict):
            raise resolver.fail(path, "expected a mapping of overrides")
        if "gamma" in overrides:
            set_gamma = resolver.quantity(overrides["gamma"], "rate", (*path, "gamma"), None)
        else:
            set_gamma = gamma
        values = resolver.section(overrides, set_kinds, path, set_gamma)
        resolved["parameter_sets"][str(name)] = values
        set_physics = {**physics, **{k: v for k, v in values.items() if k in PHYSICS_KINDS}}
        set_protocol = {**protocol, **{k: v for k, v in values.items() if k in PROTOCOL_KINDS}}
        set_coupler = (
            dataclasses.replace(coupler_params, g_s=set_physics["g_s"]) if enabled else None
        )
        experiments[str(name)] = _experiment(
            str(name), set_physics, set_protocol, set_coupler, resolver.line(path)
        )
    if not experiments:
        experiments["default"] = _experiment(
            "default",
            physics,
            protocol,
            coupler_params if enabled else None,
            resolver.line(("physics",)),
        )

    sweep_raw = raw["sweep"]
    if not isinstance(sweep_raw, dict):
        raise resolver.fail(("sweep",), "expected a mapping")
    unknown = sorted(
        set(sweep_raw) - {"tau_values", "p_gate_values", "substeps", "xi", "xi_baseline"}
    )
    if unknown:
        raise resolver.fail(("sweep", unknown[0]), f"unknown key '{unknown[0]}'")
    for key in ("tau_values", "p_gate_values"):
        if not isinstance(sweep_raw.get(key), list) or not sweep_raw[key]:
            raise resolver.fail(("sweep", key), "expected a non-empty list")
    taus = tuple(
        resolver.quantity(value, "time", ("sweep", "tau_values", str(index)), gamma)
        for index, value in enumerate(sweep_raw["tau_values"])
    )
    p_gates = tuple(
        resolver.quantity(value, "probability", ("sweep", "p_gate_values", str(index)), gamma)
        for index, value in enumerate(sweep_raw["p_gate_values"])
    )
    if min(taus) <= 0:
        raise resolver.fail(("sweep", "tau_values"), "times must be positive")
    if min(p_gates) < 0 or max(p_gates) > 1:
        raise resolver.fail(("sweep", "p_gate_values"), "probabilities must lie in [0, 1]")
    substeps = resolver.quantity(sweep_raw["substeps"], "integer", ("sweep", "substeps"), gamma)
    if substeps < 1:
        raise resolver.fail(("sweep", "substeps"), "must be at least 1")
    xi = resolver.quantity(sweep_raw["xi"], "number", ("sweep", "xi"), gamma)
    baseline = resolver.quantity(
        sweep_raw["xi_baseline"], "text", ("sweep", "xi_baseline"), gamma
    )
    if baseline not in ("analytic", "measured"):
        raise resolver.fail(("sweep", "xi_baseline"), "must be 'analytic' or 'measured'")
    sweep = SweepConfig(taus, p_gates, substeps, xi, baseline)
    resolved["sweep"] = {
        "tau_values": list(taus),
        "p_gate_values": list(p_gates),
        "substeps": substeps,
        "xi": xi,
        "xi_baseline": baseline,
    }

    sensing_values = resolver.section(
        raw["sensing"],
        {
            "t2": "time",
            "t2_convention": "text",
            "total_time": "time",
            "gamma_eff": "rate",
            "responsivity": "number",
        },
        ("sensing",),
        gamma,
        nullable=("gamma_eff", "responsivity"),
    )
    resolved["sensing"] = dict(sensing_values)
    if sensing_values["t2_convention"] not in ("t2", "t1"):
        raise resolver.fail(("sensing", "t2_convention"), "must be 't2' or 't1'")
    responsivity = sensing_values["responsivity"]
    if responsivity is None and coupler_params.dgs_dphi != 0:
        responsivity = flux_responsivity(coupler_params)
    if responsivity is not None and responsivity < 0:
        raise resolver.fail(("sensing", "responsivity"), "must be non-negative")
    gamma_eff = sensing_values["gamma_eff"]
    try:
        sensing = SensingConfig(
            t2=sensing_values["t2"] / MICROSECONDS_PER_SECOND,
            t2_convention=sensing_values["t2_convention"],
            total_time=sensing_values["total_time"] / MICROSECONDS_PER_SECOND,
            gamma_eff=None if gamma_eff is None else gamma_eff * MICROSECONDS_PER_SECOND,
            responsivity=responsivity,
        )
        sensing.coherence_rate()
    except ValueError as error:
        raise ConfigError(str(error), resolver.line(("sensing",))) from error
    if sensing.total_time <= 0:
        raise resolver.fail(("sensing", "total_time"), "must be positive")

    settings = raw["settings"]
    if not isinstance(settings, dict):
        raise resolver.fail(("settings",), "expected a mapping")
    unknown = sorted(set(settings) - {"log_level", "show_progress"})
    if unknown:
        raise resolver.fail(("settings", unknown[0]), f"unknown key '{unknown[0]}'")
    settings = dict(settings)
    if os.environ.get(LOG_LEVEL_ENVIRONMENT):
        settings["log_level"] = os.environ[LOG_LEVEL_ENVIRONMENT]
    resolved["settings"] = settings

    return RunConfig(
        experiments=experiments,
        sweep=sweep,
        sensing=sensing,
        settings=settings,
        resolved=resolved,
    )


def parse_config(text: str) -> RunConfig:
    """Parse YAML text, merge it over the defaults and resolve it."""
    try:
        user = yaml.safe_load(text)
    except yaml.YAMLError as error:
        mark = getattr(error, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"malformed YAML: {getattr(error, 'problem', error)}", line) from error
    if user is None:
        user = {}
    lines = _line_map(text)
    if not isinstance(user, dict):
        raise ConfigError("top level must be a mapping", lines.get(()))
    for section in SECTIONS:
        if section in user and user[section] is None:
            user[section] = {}
    return resolve_config(_merge(default_config(), user), lines)


def load_config(path: Path | None = None) -> RunConfig:
    """Load a run config from ``path``; no path means the defaults."""
    if path is None:
        config = resolve_config(default_config())
        return config
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        raise ConfigError(f"cannot read {path}: {error.strerror}") from error
    config = parse_config(text)
    config.source = path
    logger.debug("Loaded config from %s", path)
    return config


def dump_config(config: dict[str, Any]) -> str:
    return yaml.dump(config, default_flow_style=False, allow_unicode=True, sort_keys=False)


def save_config(config: dict[str, Any], path: Path) -> None:
    """Write a config mapping as YAML."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as file:
        file.write(dump_config(config))
