import io
import logging
import math
import time
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import click
import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import __version__
from .classical import best_shift, crosscorr_brute, emml_step
from .classical import convolution as circular_convolution
from .config import load_run_config
from .crosscorr import (
    DEFAULT_ALPHA,
    MIN_SAMPLES_PER_BIN,
    CrossCorrConfig,
    estimated_correlation,
    estimated_shift,
    run_convolution,
    run_crosscorr,
)
from .emml import EmmlConfig, EmmlState, emml_iteration, run_emml
from .encoding import denormalize_correlation, is_power_of_two, normalize, normalize_2d
from .errors import InputError, QcorrError
from .loaders import load_array, load_array_dir
from .report import (
    RunReport,
    SweepRow,
    compare_row,
    summarize,
    write_convergence_csv,
    write_report,
)
from .selftest import run_selftest

logger = logging.getLogger(__name__)

console = Console(stderr=True)

EXIT_OUT_OF_BOUND = 2


class QcorrGroup(click.Group):
    """Usage errors exit with 1 and library errors become click errors."""

    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as e:
            e.exit_code = 1
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = 1
            raise
        except QcorrError as e:
            raise click.ClickException(str(e)) from e


def _configure_logging(verbose: int) -> None:
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def _power_of_two(minimum: int):
    def callback(_ctx, param, value):
        if value is None:
            return None
        if value < minimum or not is_power_of_two(value):
            raise click.BadParameter(
                f"must be a power of 2 and at least {minimum}, got {value}", param=param
            )
        return value

    return callback


def _number_list(kind: str):
    """Parse a comma-separated list option; ``kind`` is "power" (M or N) or "positive"."""

    def callback(_ctx, param, value):
        if value is None:
            return None
        items = [item.strip() for item in value.split(",") if item.strip()]
        if not items:
            raise click.BadParameter("list must not be empty", param=param)
        parsed = []
        for item in items:
            try:
                number = int(item) if kind == "power" else float(item)
            except ValueError as e:
                raise click.BadParameter(f"'{item}' is not a number", param=param) from e
            if kind == "power" and (number < 2 or not is_power_of_two(number)):
                raise click.BadParameter(f"{number} is not a power of 2", param=param)
            if kind == "positive" and not number > 0:
                raise click.BadParameter(f"{number} is not positive", param=param)
            parsed.append(number)
        return parsed

    return callback


def _emit(report: RunReport, out: str | None, format: str) -> None:
    buffer = io.StringIO()
    write_report(report, buffer, format)
    if out is None:
        if format == "csv" and report.convergence:
            buffer.write("\n")
            write_convergence_csv(report, buffer)
        click.echo(buffer.getvalue(), nl=False)
        return
    with open(out, "w", encoding="utf-8", newline="") as f:
        f.write(buffer.getvalue())
    if format == "csv" and report.convergence:
        path = Path(out)
        companion = path.with_name(f"{path.stem}_convergence.csv")
        with open(companion, "w", encoding="utf-8", newline="") as f:
            write_convergence_csv(report, f)
    console.print(f"[dim]Report written to {out}[/dim]")


def _stamp(metadata: dict, started: float, stamp: bool) -> float | None:
    if not stamp:
        return None
    metadata["timestamp"] = datetime.now(timezone.utc).isoformat()
    return (time.perf_counter() - started) * 1000.0


def _print_summary(title: str, report: RunReport) -> None:
    summary = report.summary
    if summary is None:
        return
    table = Table(title=title, show_header=False)
    table.add_column("key", style="cyan")
    table.add_column("value")
    table.add_row("rows", str(len(report.rows)))
    table.add_row("max |error|", f"{summary.max_abs_error:.3e}")
    table.add_row("mean |error|", f"{summary.mean_abs_error:.3e}")
    table.add_row("within bound", f"{summary.fraction_within_bound:.1%}")
    table.add_row("oracle calls", str(summary.total_oracle_calls))
    console.print(table)
    if summary.low_coverage_rows:
        console.print(
            f"[yellow]! {summary.low_coverage_rows} rows rest on fewer than "
            f"{MIN_SAMPLES_PER_BIN} samples[/yellow]"
        )
    if report.all_within_bound:
        console.print("[green]✓ all estimates within the error bound[/green]")
    else:
        console.print("[red]✗ some estimates exceed the error bound[/red]")


def _check_n(expected: int | None, actual: int, source: str) -> None:
    if expected is not None and expected != actual:
        raise InputError(f"{source} has N={actual}, but --n {expected} was given")


@click.group(cls=QcorrGroup)
@click.version_option(__version__, prog_name="qcorr")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="YAML file with per-command option defaults",
)
@click.option("-v", "--verbose", count=True, help="Log progress (-v) or debug detail (-vv)")
@click.pass_context
def cli(ctx, config_path, verbose):
    """Simulate amplitude-estimation cross-correlation and EMML circuits."""
    _configure_logging(verbose)
    if config_path is not None:
        ctx.default_map = load_run_config(config_path)


@cli.command()
@click.argument("file_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("file_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--n", type=int, default=None, help="Expected array length (checked)")
@click.option("--m", type=int, default=None, callback=_power_of_two(4), help="Readout dimension M")
@click.option(
    "--alpha",
    type=click.FloatRange(min=0, min_open=True),
    default=DEFAULT_ALPHA,
    show_default=True,
    help="M defaults to alpha*sqrt(N), rounded up to a power of 2",
)
@click.option("--mode", type=click.Choice(["exact", "sampling"]), default="exact", show_default=True)
@click.option("--shots", type=click.IntRange(min=1), default=1024, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the report here")
@click.option("--format", type=click.Choice(["json", "csv"]), default="json", help="Output format")
@click.option("--convolution", is_flag=True, help="Estimate the circular convolution")
@click.option("--stamp", is_flag=True, help="Add timestamp and wall time to the report")
@click.pass_context
def crosscorr(ctx, file_a, file_b, n, m, alpha, mode, shots, seed, out, format, convolution, stamp):
    """Estimate the circular cross-correlation of two 1D arrays."""
    started = time.perf_counter()
    raw_a = load_array(file_a, ndim=1)
    raw_b = load_array(file_b, ndim=1)
    if raw_a.shape != raw_b.shape:
        raise InputError(
            f"'{file_a}' has length {raw_a.shape[0]}, but '{file_b}' has {raw_b.shape[0]}"
        )
    _check_n(n, raw_a.shape[0], f"'{file_a}'")

    prob_a, params_a = normalize(raw_a)
    prob_b, params_b = normalize(raw_b)
    config = CrossCorrConfig(n=raw_a.shape[0], m=m, alpha=alpha, mode=mode, shots=shots, seed=seed)

    if convolution:
        outcomes = run_convolution(prob_a, prob_b, config)
        classical = circular_convolution(prob_a.values, prob_b.values)
        raw_classical = circular_convolution(raw_a, raw_b)
    else:
        outcomes = run_crosscorr(prob_a, prob_b, config)
        classical = crosscorr_brute(prob_a.values, prob_b.values).values
        raw_classical = crosscorr_brute(raw_a, raw_b).values

    raw_estimates = None
    if not (params_a.degenerate or params_b.degenerate):
        raw_estimates = denormalize_correlation(
            estimated_correlation(outcomes), params_a, params_b
        )

    sampling = mode == "sampling"
    rows = [
        compare_row(
            o.j_bar,
            o.estimate,
            classical[o.j_bar],
            o.error_bound,
            o.m_hat,
            o.oracle_calls,
            raw_estimate=None if raw_estimates is None else raw_estimates[o.j_bar],
            raw_classical=None if raw_estimates is None else raw_classical[o.j_bar],
            peak_theory=o.peak_theory(min(max(float(classical[o.j_bar]), 0.0), 1.0)),
            samples=o.samples if sampling else None,
            low_coverage=o.low_coverage if sampling else None,
        )
        for o in outcomes
    ]
    metadata = {
        "command": "crosscorr",
        "algorithm": "convolution" if convolution else "crosscorr",
        "inputs": [str(file_a), str(file_b)],
        "n": config.n,
        "m": config.readout_dim,
        "alpha": alpha,
        "mode": mode,
        "shots": shots if mode == "sampling" else None,
        "seed": seed,
        "estimated_shift": estimated_shift(outcomes),
        "classical_shift": best_shift(classical)[0],
    }
    wall_time = _stamp(metadata, started, stamp)
    report = RunReport(metadata, rows, summarize(rows, outcomes[0].oracle_calls, wall_time))

    _emit(report, out, format)
    _print_summary(f"crosscorr N={config.n} M={config.readout_dim}", report)
    if not report.all_within_bound:
        ctx.exit(EXIT_OUT_OF_BOUND)


def _emml_rows(run) -> list:
    rows = []
    for iteration in run.iterations:
        source = iteration.source
        for array_id, estimates in enumerate(iteration.estimates):
            classical = emml_step(source.template, source.data[array_id]).values
            for p in estimates:
                rows.append(
                    compare_row(
                        p.j * source.n + p.k,
                        p.value,
                        classical[p.j, p.k],
                        p.error_bound,
                        p.m_hat,
                        p.oracle_calls,
                        t=iteration.state.t,
                        array_id=array_id,
                    )
                )
    return rows


@cli.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--n", type=int, default=None, help="Expected array side length (checked)")
@click.option("--m", type=int, default=None, callback=_power_of_two(4), help="Readout dimension M")
@click.option(
    "--alpha",
    type=click.FloatRange(min=0, min_open=True),
    default=DEFAULT_ALPHA,
    show_default=True,
    help="M defaults to alpha*N, rounded up to a power of 2",
)
@click.option("--iterations", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=1e-6, show_default=True)
@click.option("--mode", type=click.Choice(["exact", "sampling"]), default="exact", show_default=True)
@click.option("--shots", type=click.IntRange(min=1), default=1024, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the report here")
@click.option("--format", type=click.Choice(["json", "csv"]), default="json", help="Output format")
@click.option("--stamp", is_flag=True, help="Add timestamp and wall time to the report")
@click.pass_context
def emml(ctx, directory, n, m, alpha, iterations, tol, mode, shots, seed, workers, out, format, stamp):
    """Run EMML alignment over the N x N arrays in DIRECTORY."""
    started = time.perf_counter()
    loaded = load_array_dir(directory)
    arrays = [normalize_2d(values)[0] for _, values in loaded]
    side = arrays[0].n
    _check_n(n, side, f"'{directory}'")

    config = EmmlConfig(
        n=side,
        m=m,
        alpha=alpha,
        mode=mode,
        shots=shots,
        seed=seed,
        max_iterations=iterations,
        convergence_tol=tol,
        workers=workers,
    )
    run = run_emml(arrays, config)
    rows = _emml_rows(run)

    metadata = {
        "command": "emml",
        "algorithm": "emml",
        "inputs": [p.name for p, _ in loaded],
        "n": side,
        "m": config.readout_dim,
        "alpha": alpha,
        "mode": mode,
        "shots": shots if mode == "sampling" else None,
        "seed": seed,
        "iterations_run": len(run.iterations),
        "converged": run.converged,
    }
    wall_time = _stamp(metadata, started, stamp)
    report = RunReport(
        metadata,
        rows,
        summarize(rows, run.total_oracle_calls, wall_time),
        [asdict(row) for row in run.convergence],
    )

    _emit(report, out, format)
    _print_summary(f"emml N={side} M={config.readout_dim}", report)
    if not report.all_within_bound:
        ctx.exit(EXIT_OUT_OF_BOUND)


def _sweep_inputs(algorithm: str, inputs: tuple[str, ...], n: int, rng: np.random.Generator):
    if algorithm == "crosscorr":
        if inputs:
            if len(inputs) != 2:
                raise click.UsageError("crosscorr sweeps take two input files or none")
            return [load_array(path, ndim=1) for path in inputs]
        return [rng.random(n), rng.random(n)]
    if inputs:
        if len(inputs) != 1:
            raise click.UsageError("emml sweeps take one input directory or none")
        return [values for _, values in load_array_dir(inputs[0])]
    return [rng.random((n, n)), rng.random((n, n))]


def _sweep_crosscorr(raw, m, alpha, mode, shots, seed) -> SweepRow:
    prob_a, _ = normalize(raw[0])
    prob_b, _ = normalize(raw[1])
    n = prob_a.n
    config = CrossCorrConfig(n=n, m=m, alpha=alpha, mode=mode, shots=shots, seed=seed)
    outcomes = run_crosscorr(prob_a, prob_b, config)
    classical = crosscorr_brute(prob_a.values, prob_b.values).values
    errors = np.abs(estimated_correlation(outcomes) - classical)
    calls = outcomes[0].oracle_calls
    return SweepRow(
        n=n,
        m=config.readout_dim,
        alpha=None if m is not None else alpha,
        max_abs_error=float(errors.max()),
        mean_abs_error=float(errors.mean()),
        mean_error_bound=float(np.mean([o.error_bound for o in outcomes])),
        oracle_calls_per_run=calls,
        total_oracle_calls=calls,
        classical_cost=float(n * math.log2(n)),
    )


def _sweep_emml(raw, m, alpha, mode, shots, seed) -> SweepRow:
    state = EmmlState.from_arrays([normalize_2d(values)[0] for values in raw])
    n = state.n
    config = EmmlConfig(n=n, m=m, alpha=alpha, mode=mode, shots=shots, seed=seed, max_iterations=1)
    iteration = emml_iteration(state, config)
    errors, bounds = [], []
    for array_id, estimates in enumerate(iteration.estimates):
        classical = emml_step(state.template, state.data[array_id]).values
        errors.extend(abs(p.value - classical[p.j, p.k]) for p in estimates)
        bounds.extend(p.error_bound for p in estimates)
    return SweepRow(
        n=n,
        m=config.readout_dim,
        alpha=None if m is not None else alpha,
        max_abs_error=float(max(errors)),
        mean_abs_error=float(np.mean(errors)),
        mean_error_bound=float(np.mean(bounds)),
        oracle_calls_per_run=config.readout_dim - 1,
        total_oracle_calls=iteration.oracle_calls,
        classical_cost=float(n * n * math.log2(n)),
    )


@cli.command()
@click.argument("inputs", nargs=-1, type=click.Path(exists=True))
@click.option(
    "--algorithm", type=click.Choice(["crosscorr", "emml"]), default="crosscorr", show_default=True
)
@click.option("--n", type=int, default=8, callback=_power_of_two(2), show_default=True,
              help="Array length for random inputs")
@click.option("--alpha", type=click.FloatRange(min=0, min_open=True), default=DEFAULT_ALPHA,
              show_default=True)
@click.option("--m-list", callback=_number_list("power"), help="Comma-separated readout dimensions")
@click.option("--alpha-list", callback=_number_list("positive"), help="Comma-separated alphas")
@click.option("--n-list", callback=_number_list("power"), help="Comma-separated array lengths")
@click.option("--mode", type=click.Choice(["exact", "sampling"]), default="exact", show_default=True)
@click.option("--shots", type=click.IntRange(min=1), default=1024, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the report here")
@click.option("--format", type=click.Choice(["json", "csv"]), default="json", help="Output format")
def sweep(inputs, algorithm, n, alpha, m_list, alpha_list, n_list, mode, shots, seed, out, format):
    """Trade precision against cost over a list of M, alpha or N values.

    Without INPUTS, random arrays are drawn from --seed.
    """
    if sum(1 for values in (m_list, alpha_list, n_list) if values) != 1:
        raise click.UsageError("Give exactly one of --m-list, --alpha-list or --n-list")
    if m_list and any(m < 4 for m in m_list):
        raise click.BadParameter("readout dimensions must be at least 4", param_hint="--m-list")
    if n_list and inputs:
        raise click.UsageError("--n-list needs random inputs; the input files fix N")

    rng = np.random.default_rng(seed)
    run = _sweep_crosscorr if algorithm == "crosscorr" else _sweep_emml
    rows = []
    if n_list:
        for size in n_list:
            raw = _sweep_inputs(algorithm, (), size, rng)
            rows.append(run(raw, None, alpha, mode, shots, seed))
    else:
        raw = _sweep_inputs(algorithm, inputs, n, rng)
        points = [(m, alpha) for m in m_list] if m_list else [(None, a) for a in alpha_list]
        for m, a in points:
            rows.append(run(raw, m, a, mode, shots, seed))
    for row in rows:
        logger.info(
            "N=%d M=%d: max error %.3g, %d oracle calls",
            row.n,
            row.m,
            row.max_abs_error,
            row.total_oracle_calls,
        )

    metadata = {
        "command": "sweep",
        "algorithm": algorithm,
        "inputs": [str(p) for p in inputs] or None,
        "mode": mode,
        "shots": shots if mode == "sampling" else None,
        "seed": seed,
        "m_list": m_list,
        "alpha_list": alpha_list,
        "n_list": n_list,
    }
    report = RunReport(metadata, rows)
    _emit(report, out, format)

    table = Table(title=f"sweep ({algorithm})")
    for column in ("N", "M", "max |error|", "mean bound", "oracle calls", "classical cost"):
        table.add_column(column, justify="right")
    for row in rows:
        table.add_row(
            str(row.n),
            str(row.m),
            f"{row.max_abs_error:.3e}",
            f"{row.mean_error_bound:.3e}",
            str(row.total_oracle_calls),
            f"{row.classical_cost:g}",
        )
    console.print(table)


@cli.command()
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.pass_context
def selftest(ctx, seed):
    """Check every statevector primitive against its explicit matrix."""
    results = run_selftest(seed)
    table = Table(title="statevector self check")
    table.add_column("check")
    table.add_column("deviation", justify="right")
    table.add_column("tolerance", justify="right")
    table.add_column("")
    for result in results:
        mark = "[green]✓[/green]" if result.passed else "[red]✗[/red]"
        table.add_row(result.name, f"{result.deviation:.2e}", f"{result.tolerance:.0e}", mark)
    console.print(table)

    failed = [r.name for r in results if not r.passed]
    if failed:
        console.print(f"[red]✗ {len(failed)} checks failed: {', '.join(failed)}[/red]")
        ctx.exit(EXIT_OUT_OF_BOUND)
    console.print(f"[green]✓ {len(results)} checks passed[/green]")


if __name__ == "__main__":
    cli()
