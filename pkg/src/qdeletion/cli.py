"""Command-line entry point built with Typer.

Tables and sweeps are written as CSV/TSV to stdout (or ``--output``); diagnostics, summaries
and log records go to stderr so the data stream stays parseable.
"""

# ruff: noqa: B008

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import NoReturn, Optional, cast

import click
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape

from . import __version__
from .config import ConfigError, QdeletionConfig, load_config
from .limiting import LimitingError, Reference, table_rows
from .linalg import LinalgError, Tolerances
from .machines import (
    PB_ALONE_AVERAGE,
    BlankState,
    Machine,
    MachineError,
    average_fidelity,
    monte_carlo_average,
)
from .sweep import (
    AVERAGE_HEADER,
    PB_HEADER,
    TABLE_HEADER,
    VERIFY_HEADER,
    BranchSelection,
    GridSpec,
    OutputFormat,
    SweepConfig,
    SweepConfigError,
    format_deviation,
    format_number,
    pb_points,
    pb_records,
    render_delimited,
    table_records,
)
from .templates import ReportConfig, TemplateRenderError, render_verification_report
from .verification import all_passed, run_verification

logger = logging.getLogger(__name__)

EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

err_console = Console(stderr=True, soft_wrap=True)
app = typer.Typer(
    no_args_is_help=True,
    add_completion=True,
    help="Simulate approximate quantum deletion machines and reproduce their fidelity tables.",
)

FORMAT_OPTION = typer.Option(
    None, "--format", case_sensitive=False, help="Output format (defaults to config, csv)."
)
PRECISION_OPTION = typer.Option(
    None, "--precision", min=1, max=15, help="Decimal places (defaults to config, 4)."
)
OUTPUT_OPTION = typer.Option(
    None, "--output", "-o", help="Write data to this file instead of stdout ('-' for stdout)."
)
GRID_OPTION = typer.Option("0:1:0.1", "--grid", help="m1^2 grid as start:stop:step.")
BRANCH_OPTION = typer.Option(
    BranchSelection.BOTH, "--branch", case_sensitive=False, help="Sign branch(es) of m1*m2."
)


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    version: bool = typer.Option(
        False,
        "--version",
        is_flag=True,
        is_eager=True,
        help="Show the qdeletion version and exit.",
    ),
    config_path: Optional[Path] = typer.Option(
        None,
        "--config",
        help="Extra config.yaml loaded after the XDG config files.",
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log debug detail to stderr."),
) -> None:
    """Load configuration and set up logging before any subcommand."""

    if version:
        typer.echo(f"qdeletion {__version__}")
        raise typer.Exit()

    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )

    state = ctx.ensure_object(dict)
    try:
        state["config"] = load_config(config_path)
    except ConfigError as exc:
        _fail(exc, EXIT_USAGE)


def _active_config() -> QdeletionConfig:
    ctx = click.get_current_context()
    state = ctx.ensure_object(dict)
    config = state.get("config")
    if config is None:
        raise RuntimeError("Config state was not initialized. This is a bug; please report it.")
    return cast(QdeletionConfig, config)


def _fail(exc: Exception, code: int) -> NoReturn:
    err_console.print(f"[red]Error:[/red] {escape(str(exc))}")
    raise typer.Exit(code=code) from exc


def _emit(text: str, output: Optional[Path]) -> None:
    if output is None or str(output) == "-":
        typer.echo(text, nl=False)
        return
    try:
        output.write_text(text, encoding="utf-8")
    except OSError as exc:
        _fail(OSError(f"Unable to write output '{output}': {exc.strerror or exc}"), EXIT_USAGE)
    err_console.print(f"[green]Output written to[/green] {escape(str(output))}")


def _parse_grid(text: str) -> GridSpec:
    try:
        return GridSpec.parse(text)
    except SweepConfigError as exc:
        _fail(exc, EXIT_USAGE)


def _sweep_config(**values: object) -> SweepConfig:
    config = _active_config()
    if values.get("output_format") is None:
        values["output_format"] = config.output_format
    if values.get("precision") is None:
        values["precision"] = config.precision
    values.setdefault("tolerances", config.tolerances)
    try:
        return SweepConfig.build(**values)
    except SweepConfigError as exc:
        _fail(exc, EXIT_USAGE)


def _blank_from_cli(m1: float, m2: float, tolerance: float) -> BlankState:
    """Validate typed amplitudes and renormalise them once."""

    if not (math.isfinite(m1) and math.isfinite(m2)):
        _fail(ValueError("m1 and m2 must be finite numbers."), EXIT_USAGE)
    total = m1 * m1 + m2 * m2
    if abs(total - 1.0) > tolerance:
        _fail(
            ValueError(
                f"m1^2 + m2^2 = {total!r} differs from 1 by more than {tolerance:g}; "
                "the blank state must be normalised."
            ),
            EXIT_USAGE,
        )
    if total != 1.0:
        norm = math.sqrt(total)
        m1, m2 = m1 / norm, m2 / norm
        err_console.print(
            f"[bold yellow]note[/bold yellow]: renormalised blank by 1/{norm!r} "
            f"(m1^2 + m2^2 was off by {total - 1.0:.3e})."
        )
    try:
        return BlankState(m1, m2)
    except MachineError as exc:
        _fail(exc, EXIT_USAGE)


def _run_table(
    machine: Machine,
    *,
    grid: str,
    branch: BranchSelection,
    output_format: Optional[OutputFormat],
    precision: Optional[int],
    output: Optional[Path],
    reference: Reference = Reference.SIGMA_PRIME,
) -> None:
    sweep = _sweep_config(
        machine=machine,
        m1_sq=_parse_grid(grid),
        branch=branch,
        output_format=output_format,
        precision=precision,
    )
    try:
        kind = sweep.table_kind
        rows = table_rows(kind, sweep.m1_sq.values(), reference=reference)
    except (LimitingError, SweepConfigError) as exc:
        _fail(exc, EXIT_USAGE)
    logger.debug("%s: %d rows", kind.value, len(rows))
    records = table_records(rows, branch=sweep.branch, precision=sweep.precision)
    _emit(render_delimited(TABLE_HEADER, records, sweep.output_format), output)


@app.command()
def table1(
    grid: str = GRID_OPTION,
    branch: BranchSelection = BRANCH_OPTION,
    output_format: Optional[OutputFormat] = FORMAT_OPTION,
    precision: Optional[int] = PRECISION_OPTION,
    output: Optional[Path] = OUTPUT_OPTION,
) -> None:
    """Limiting fidelity of the one-transformer machine on both sign branches."""

    _run_table(
        Machine.ONE_TRANSFORMER_LIMIT,
        grid=grid,
        branch=branch,
        output_format=output_format,
        precision=precision,
        output=output,
    )


@app.command()
def table2(
    grid: str = GRID_OPTION,
    branch: BranchSelection = BRANCH_OPTION,
    reference: Reference = typer.Option(
        Reference.SIGMA_PRIME,
        "--reference",
        case_sensitive=False,
        help="Target state: the equal superposition of |S> and |S_perp>, or plain |S>.",
    ),
    output_format: Optional[OutputFormat] = FORMAT_OPTION,
    precision: Optional[int] = PRECISION_OPTION,
    output: Optional[Path] = OUTPUT_OPTION,
) -> None:
    """Limiting fidelity of the two-transformer machine on both sign branches."""

    _run_table(
        Machine.TWO_TRANSFORMER_LIMIT,
        grid=grid,
        branch=branch,
        output_format=output_format,
        precision=precision,
        output=output,
        reference=reference,
    )


@app.command()
def pb(
    m1: float = typer.Option(..., "--m1", help="Blank amplitude m1."),
    m2: float = typer.Option(..., "--m2", help="Blank amplitude m2."),
    alpha: str = typer.Option("0:1:0.1", "--alpha", help="alpha value or start:stop:step grid."),
    beta_phase: float = typer.Option(0.0, "--beta-phase", help="Phase of beta in radians."),
    tol: Optional[float] = typer.Option(
        None, "--tol", min=0.0, help="Allowed |m1^2 + m2^2 - 1| before renormalising."
    ),
    output_format: Optional[OutputFormat] = FORMAT_OPTION,
    precision: Optional[int] = PRECISION_OPTION,
    output: Optional[Path] = OUTPUT_OPTION,
) -> None:
    """Deleter + transformer: simulated and closed-form mode-2 state over an alpha grid."""

    sweep = _sweep_config(
        machine=Machine.PB_WITH_TRANSFORMER,
        alpha=_parse_grid(alpha),
        output_format=output_format,
        precision=precision,
    )
    tolerance = tol if tol is not None else sweep.tolerances.cli_normalization
    blank = _blank_from_cli(m1, m2, tolerance)
    assert sweep.alpha is not None

    try:
        points = pb_points(blank, sweep.alpha.values(), beta_phase)
    except (MachineError, LinalgError) as exc:
        _fail(exc, EXIT_USAGE)
    _emit(
        render_delimited(PB_HEADER, pb_records(points, sweep.precision), sweep.output_format),
        output,
    )

    fidelities = [point.f2_simulated for point in points]
    worst = max(point.deviation for point in points)
    err_console.print(
        f"F2 min {min(fidelities):.{sweep.precision}f}, max {max(fidelities):.{sweep.precision}f}, "
        f"spread {max(fidelities) - min(fidelities):.3e}; "
        f"largest simulated vs closed-form deviation {format_deviation(worst)}"
    )


@app.command()
def average(
    machine: Machine = typer.Option(
        Machine.PB_WITH_TRANSFORMER, "--machine", case_sensitive=False, help="Machine id."
    ),
    m1: float = typer.Option(..., "--m1", help="Blank amplitude m1."),
    m2: float = typer.Option(..., "--m2", help="Blank amplitude m2."),
    samples: Optional[int] = typer.Option(
        None, "--samples", min=2, help="Quadrature points over alpha^2 (defaults to config)."
    ),
    monte_carlo: Optional[int] = typer.Option(
        None, "--monte-carlo", min=1, help="Also estimate with this many random inputs."
    ),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for --monte-carlo."),
    tol: Optional[float] = typer.Option(
        None, "--tol", min=0.0, help="Allowed |m1^2 + m2^2 - 1| before renormalising."
    ),
    output_format: Optional[OutputFormat] = FORMAT_OPTION,
    precision: Optional[int] = PRECISION_OPTION,
    output: Optional[Path] = OUTPUT_OPTION,
) -> None:
    """Input-averaged deletion fidelity of one machine."""

    config = _active_config()
    sweep = _sweep_config(machine=machine, output_format=output_format, precision=precision)
    tolerance = tol if tol is not None else sweep.tolerances.cli_normalization
    blank = _blank_from_cli(m1, m2, tolerance)
    count = samples if samples is not None else config.samples

    try:
        quadrature = average_fidelity(sweep.machine, blank, count)
        sampled = (
            monte_carlo_average(
                sweep.machine, blank, monte_carlo, seed=seed if seed is not None else config.seed
            )
            if monte_carlo is not None
            else None
        )
    except (MachineError, LimitingError, LinalgError) as exc:
        _fail(exc, EXIT_USAGE)

    digits = sweep.precision
    record = [
        sweep.machine.value,
        format_number(blank.m1, digits),
        format_number(blank.m2.real, digits),
        str(count),
        format_number(quadrature, digits),
        format_number(sampled, digits) if sampled is not None else "",
        format_number(PB_ALONE_AVERAGE, digits) if sweep.machine is Machine.PB_ALONE else "",
    ]
    _emit(render_delimited(AVERAGE_HEADER, [record], sweep.output_format), output)


@app.command()
def verify(
    tol: Optional[float] = typer.Option(
        None, "--tol", min=0.0, help="Tolerance for printed table and spot values."
    ),
    algebraic_tol: Optional[float] = typer.Option(
        None, "--algebraic-tol", min=0.0, help="Tolerance for algebraic identities."
    ),
    eigen_tol: Optional[float] = typer.Option(
        None, "--eigen-tol", min=0.0, help="Tolerance for eigen-solver outputs."
    ),
    samples: Optional[int] = typer.Option(
        None, "--samples", min=2, help="Quadrature points for the averaging checks."
    ),
    report: Optional[Path] = typer.Option(
        None, "--report", help="Also write a Markdown report to this path."
    ),
    output_format: Optional[OutputFormat] = FORMAT_OPTION,
    output: Optional[Path] = OUTPUT_OPTION,
) -> None:
    """Run every check; exit 1 if any fails (the full list is still printed)."""

    config = _active_config()
    overrides = {
        key: value
        for key, value in (("table", tol), ("algebraic", algebraic_tol), ("eigen", eigen_tol))
        if value is not None
    }
    # model_construct: command-line overrides may be 0
    tolerances = Tolerances.model_construct(**{**config.tolerances.model_dump(), **overrides})
    count = samples if samples is not None else config.samples
    fmt = output_format or config.output_format

    outcomes = run_verification(tolerances, samples=count, seed=config.seed)
    records = [
        [
            outcome.check,
            outcome.status,
            format_deviation(outcome.deviation),
            format_deviation(outcome.tolerance),
            outcome.anchor,
        ]
        for outcome in outcomes
    ]
    _emit(render_delimited(VERIFY_HEADER, records, fmt), output)

    if report is not None:
        try:
            text = render_verification_report(
                ReportConfig(outcomes, tolerances=tolerances, samples=count, seed=config.seed)
            )
            report.write_text(text, encoding="utf-8")
        except (OSError, TemplateRenderError) as exc:
            _fail(exc, EXIT_USAGE)
        err_console.print(f"[green]Report written to[/green] {escape(str(report))}")

    failed = [outcome for outcome in outcomes if not outcome.passed]
    if all_passed(outcomes):
        err_console.print(f"[green]All {len(outcomes)} checks passed.[/green]")
        return
    err_console.print(f"[red]{len(failed)} of {len(outcomes)} checks failed:[/red]")
    for outcome in failed:
        err_console.print(
            f" • {escape(outcome.check)}: deviation {format_deviation(outcome.deviation)} "
            f"> {format_deviation(outcome.tolerance)}"
        )
    raise typer.Exit(code=EXIT_CHECK_FAILED)
