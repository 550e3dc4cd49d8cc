"""qecmag CLI - Typer application entry point."""

from __future__ import annotations

import logging
import math
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

import typer

app = typer.Typer(
    help="qecmag - error-corrected magnetometry simulator", invoke_without_command=True
)

logger = logging.getLogger(__name__)

BANNER = r"""
   __ _  ___  ___ _ __ ___   __ _  __ _
  / _` |/ _ \/ __| '_ ` _ \ / _` |/ _` |
 | (_| |  __/ (__| | | | | | (_| | (_| |
  \__, |\___|\___|_| |_| |_|\__,_|\__, |
     |_|                          |___/
  Four-qubit amplitude-damping code magnetometry
"""

EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

CONFIG_OPTION = typer.Option(None, "--config", "-c", help="YAML run config")
OUT_OPTION = typer.Option(Path("results"), "--out", "-o", help="Output directory")
SEED_OPTION = typer.Option(None, "--seed", help="Override protocol.seed")
MODE_OPTION = typer.Option(None, "--mode", help="deterministic | trajectory")
RUNS_OPTION = typer.Option(None, "--runs", help="Override protocol.n_runs")
LOG_LEVEL_OPTION = typer.Option(None, "--log-level", help="Override settings.log_level")


@app.callback()
def main(context: typer.Context) -> None:
    """qecmag - error-corrected magnetometry simulator."""
    if context.invoked_subcommand is None:
        from rich.console import Console

        from qecmag import __version__

        console = Console()
        console.print(f"[cyan]{BANNER}[/cyan]")
        console.print(f"  [dim]v{__version__}[/dim]\n")
        console.print("Run [green]qecmag --help[/green] for available commands.\n")


@contextmanager
def _session(
    command: str,
    config_path: Path | None,
    out: Path,
    seed: int | None,
    mode: str | None,
    runs: int | None,
    log_level: str | None,
) -> Iterator[tuple]:
    """Load config, configure logging, map errors to exit codes and write the manifest."""
    from rich.console import Console

    from qecmag.config import ConfigError, load_config
    from qecmag.outputs import RunManifest, WarningCollector
    from qecmag.qstate import NumericalError
    from qecmag.utils import setup_logging

    console = Console()
    try:
        config = load_config(config_path).with_overrides(seed=seed, mode=mode, n_runs=runs)
    except ConfigError as error:
        console.print(f"[red]Config error:[/red] {error}")
        raise typer.Exit(code=EXIT_CONFIG_ERROR) from None

    setup_logging(log_level or config.settings.get("log_level", "INFO"))
    collector = WarningCollector()
    logging.getLogger().addHandler(collector)
    manifest = RunManifest(command=command, config=config.resolved, seed=config.base.seed)
    try:
        yield config, manifest, console
    except ConfigError as error:
        console.print(f"[red]Config error:[/red] {error}")
        raise typer.Exit(code=EXIT_CONFIG_ERROR) from None
    except NumericalError as error:
        console.print(f"[red]Numerical failure:[/red] {error}")
        for key, value in error.diagnostics.items():
            console.print(f"  [dim]{key} = {value}[/dim]")
        raise typer.Exit(code=EXIT_NUMERICAL_ERROR) from None
    except ValueError as error:
        console.print(f"[red]Invalid parameters:[/red] {error}")
        raise typer.Exit(code=EXIT_CONFIG_ERROR) from None
    finally:
        logging.getLogger().removeHandler(collector)
    manifest.warnings = collector.messages
    manifest_path = manifest.write(out)
    console.print(
        f"[green]Wrote {len(manifest.outputs)} file(s)[/green] [dim]{manifest_path}[/dim]"
    )


@contextmanager
def _progress(config, console, title: str, rows, columns, **options) -> Iterator:
    """Yield a progress hook; a live grid when ``settings.show_progress`` is on."""
    if not config.settings.get("show_progress", True):
        yield None
        return
    from qecmag.progress import SweepGrid

    grid = SweepGrid(title, list(rows), list(columns), console=console, **options)
    with grid.live():
        yield grid.cell


@app.command()
def fidelity(
    config_path: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    seed: int = SEED_OPTION,
    mode: str = MODE_OPTION,
    runs: int = RUNS_OPTION,
    log_level: str = LOG_LEVEL_OPTION,
) -> None:
    """Logical fidelity of the encoded sensor under repeated correction."""
    from qecmag.experiments import run_cycles
    from qecmag.outputs import write_csv

    with _session("fidelity", config_path, out, seed, mode, runs, log_level) as session:
        config, manifest, console = session
        for name, experiment in config.experiments.items():
            series = run_cycles(experiment)
            rows = [
                (float(t), float(value), float(error), experiment.mode)
                for t, value, error in zip(series.times, series.values, series.stderr)
            ]
            path = write_csv(
                out / f"fidelity-{name}.csv", ("time", "fidelity", "stderr", "mode"), rows
            )
            manifest.record(path)
            if series.pre_correction is not None:
                within = [
                    (float(t), float(before), float(after))
                    for t, before, after in zip(series.times, series.pre_correction, series.values)
                ]
                manifest.record(
                    write_csv(
                        out / f"fidelity-{name}-within-round.csv",
                        ("time", "before_correction", "after_correction"),
                        within,
                    )
                )
            console.print(f"  {name}: F(T) = {series.values[-1]:.6f}")


@app.command()
def ramsey(
    config_path: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    seed: int = SEED_OPTION,
    mode: str = MODE_OPTION,
    runs: int = RUNS_OPTION,
    log_level: str = LOG_LEVEL_OPTION,
) -> None:
    """Population of |0̄⟩ while the signal coupling is on, with the bare-qubit fringe."""
    from qecmag.experiments import FitError, fit_ramsey, unencoded_ramsey
    from qecmag.experiments import ramsey as run_ramsey
    from qecmag.outputs import append_jsonl, write_csv

    with _session("ramsey", config_path, out, seed, mode, runs, log_level) as session:
        config, manifest, console = session
        report = out / "ramsey-fit.jsonl"
        report.unlink(missing_ok=True)
        for name, experiment in config.experiments.items():
            series = run_ramsey(experiment)
            rows = [
                (float(t), float(value), float(error))
                for t, value, error in zip(series.times, series.values, series.stderr)
            ]
            manifest.record(
                write_csv(out / f"ramsey-{name}.csv", ("time", "population", "stderr"), rows)
            )
            bare = unencoded_ramsey(experiment.gamma, experiment.g_s, series.times)
            manifest.record(
                write_csv(
                    out / f"ramsey-{name}-unencoded.csv",
                    ("time", "population"),
                    [(float(t), float(value)) for t, value in zip(bare.times, bare.values)],
                )
            )
            record = {"parameter_set": name, "g_s": experiment.g_s}
            try:
                fit = fit_ramsey(series, omega_guess=2 * abs(experiment.g_s) or None)
            except FitError as error:
                logger.warning("Ramsey fit failed for %s: %s", name, error)
                record["error"] = str(error)
            else:
                record.update(
                    gamma=fit.gamma,
                    gamma_stderr=fit.gamma_stderr,
                    omega=fit.omega,
                    omega_stderr=fit.omega_stderr,
                )
                console.print(f"  {name}: Γ = {fit.gamma:.4g}, ω = {fit.omega:.4g}")
            manifest.record(append_jsonl(report, record))


@app.command("gamma-eff")
def gamma_eff(
    config_path: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    seed: int = SEED_OPTION,
    mode: str = MODE_OPTION,
    runs: int = RUNS_OPTION,
    log_level: str = LOG_LEVEL_OPTION,
    dephasing: bool = typer.Option(
        False, "--dephasing", help="Also measure the intra-interval dephasing rate"
    ),
) -> None:
    """Effective coherence rate over the (tau_ec, p_gate) sweep and the fitted ξ."""
    from qecmag.experiments import FitError, finite_tau_dephasing, fit_xi, gamma_eff_sweep
    from qecmag.outputs import append_jsonl, write_csv

    with _session("gamma-eff", config_path, out, seed, mode, runs, log_level) as session:
        config, manifest, console = session
        sweep, base = config.sweep, config.base
        with _progress(
            config,
            console,
            "Γ_eff sweep",
            sweep.tau_values,
            sweep.p_gate_values,
            reference_rate=0.5 * base.gamma,
        ) as progress:
            points = gamma_eff_sweep(base, sweep.tau_values, sweep.p_gate_values, progress)
        rows = []
        for point in points:
            low, high = point.fit.ci if point.fit else (math.nan, math.nan)
            rows.append(
                (point.tau_ec, point.p_gate, point.gamma_eff, low, high, point.error or "")
            )
        manifest.record(
            write_csv(
                out / "gamma-eff.csv",
                ("tau_ec", "p_gate", "gamma_eff", "ci_lo", "ci_hi", "error"),
                rows,
            )
        )

        report = out / "xi.jsonl"
        report.unlink(missing_ok=True)
        record = {"baseline": sweep.xi_baseline, "gamma": base.gamma}
        try:
            xi = fit_xi(points, base.gamma, baseline=sweep.xi_baseline)
        except FitError as error:
            logger.warning("ξ fit failed: %s", error)
            record["error"] = str(error)
        else:
            record.update(
                xi=xi.xi,
                ci_lo=xi.ci[0],
                ci_hi=xi.ci[1],
                r_squared=xi.residual,
                n_points=xi.n_points,
            )
            console.print(f"  ξ = {xi.xi:.3g}  [{xi.ci[0]:.3g}, {xi.ci[1]:.3g}]")
        manifest.record(append_jsonl(report, record))

        if dephasing:
            title = f"Intra-interval dephasing (substeps={sweep.substeps})"
            columns = (base.g_s, 0.0) if base.g_s else (0.0,)
            with _progress(
                config, console, title, sweep.tau_values, columns, column_name="g_s"
            ) as hook:
                series = finite_tau_dephasing(base, sweep.tau_values, sweep.substeps, hook)
            manifest.record(
                write_csv(
                    out / "finite-tau-dephasing.csv",
                    ("tau_ec", "extra_rate", "stderr"),
                    [
                        (float(t), float(value), float(error))
                        for t, value, error in zip(series.times, series.values, series.stderr)
                    ],
                )
            )


@app.command()
def sensitivity(
    config_path: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    log_level: str = LOG_LEVEL_OPTION,
    gamma_eff: float = typer.Option(
        None, "--gamma-eff", help="Effective coherence rate in 1/s (overrides sensing config)"
    ),
) -> None:
    """Field resolution, optimal evolution time and correction-round timing."""
    from qecmag.config import ConfigError
    from qecmag.outputs import append_jsonl
    from qecmag.sensing import (
        SensitivityInputs,
        optimal_time,
        ramsey_resolution,
        worst_case_round,
    )
    from qecmag.sensing import sensitivity as field_resolution
    from qecmag.utils import format_tesla

    with _session("sensitivity", config_path, out, None, None, None, log_level) as session:
        config, manifest, console = session
        sensing = config.sensing
        if sensing.responsivity is None:
            raise ConfigError(
                "sensing.responsivity is missing and the coupler gives no dgs_dphi"
            )
        rate = gamma_eff if gamma_eff is not None else sensing.coherence_rate()
        inputs = SensitivityInputs(rate, sensing.responsivity, sensing.total_time)
        report = field_resolution(inputs)
        record = report.as_record()
        if rate > 0:
            optimum = optimal_time(rate)
            record.update(
                t_star=optimum.t_star,
                t_star_closed_form=optimum.closed_form,
                ramsey_resolution_at_t_star=ramsey_resolution(optimum.t_star, inputs),
            )
        else:
            record.update(t_star=math.inf, t_star_closed_form=math.inf)
        cost = worst_case_round()
        record.update(
            t2=sensing.t2,
            t2_convention=sensing.t2_convention,
            gamma_eff_source="option" if gamma_eff is not None else "config",
            round_duration_us=cost.duration,
            round_two_qubit_native=cost.native_two_qubit,
            round_two_qubit_routed=cost.routed_two_qubit,
        )
        path = out / "sensitivity.jsonl"
        path.unlink(missing_ok=True)
        manifest.record(append_jsonl(path, record))
        console.print(
            f"  δB = {format_tesla(report.delta_b)}  "
            f"({format_tesla(report.per_root_hz)}/√Hz, T = {inputs.total_time:g} s)"
        )


@app.command()
def threshold(
    config_path: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    seed: int = SEED_OPTION,
    mode: str = MODE_OPTION,
    runs: int = RUNS_OPTION,
    log_level: str = LOG_LEVEL_OPTION,
) -> None:
    """Better/worse map against the bare coherence rate over the sweep grid."""
    from qecmag.experiments import threshold_map
    from qecmag.outputs import write_csv

    with _session("threshold", config_path, out, seed, mode, runs, log_level) as session:
        config, manifest, console = session
        sweep = config.sweep
        with _progress(
            config,
            console,
            "Threshold map",
            sweep.tau_values,
            sorted(sweep.p_gate_values),
            reference_rate=0.5 * config.base.gamma,
        ) as progress:
            result = threshold_map(
                config.base, sweep.tau_values, sweep.p_gate_values, sweep.xi, progress
            )
        manifest.record(
            write_csv(
                out / "threshold.csv",
                ("tau_ec", "p_gate", "verdict", "gamma_eff", "boundary"),
                [
                    (cell.tau_ec, cell.p_gate, cell.verdict, cell.gamma_eff, cell.boundary)
                    for cell in result.cells
                ],
            )
        )
        manifest.record(
            write_csv(
                out / "threshold-boundary.csv",
                ("tau_ec", "simulated_p_gate", "analytic_p_gate"),
                [
                    (tau, result.simulated_boundary[tau], result.analytic_boundary[tau])
                    for tau in sweep.tau_values
                ],
            )
        )
        better = sum(cell.better for cell in result.cells)
        console.print(f"  {better}/{len(result.cells)} cells beat γ/2 = {result.unencoded_rate:g}")


@app.command("init-config")
def init_config(
    path: Path = typer.Argument(Path("qecmag.yaml"), help="Where to write the config"),
    force: bool = typer.Option(False, "--force", "-f", help="Overwrite without asking"),
) -> None:
    """Write the default config as a starting point."""
    from rich.console import Console

    from qecmag.config import default_config, save_config

    console = Console()
    if path.exists() and not force:
        overwrite = typer.confirm(f"{path} already exists. Overwrite?")
        if not overwrite:
            console.print("[yellow]Cancelled.[/yellow]")
            raise typer.Exit()
    save_config(default_config(), path)
    console.print(f"[green]Config written:[/green] {path}")
