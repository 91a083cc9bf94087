"""
Command line front end: simulation runs, kernel evaluation, frozen-boundary
plots, tiling enumeration and the validation suites.
"""
from __future__ import annotations

import functools
import logging
import math
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import click
import joblib
import numpy as np
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table
from tqdm import tqdm

from qwalks.src.asymptotics import (
    ClusterProfile,
    ScanRow,
    bounding_polygon,
    default_w_grid,
    frozen_boundary,
    realize_initial_config,
    scan_liquid_region,
)
from qwalks.src.constants import Method, Sampler
from qwalks.src.errors import ConfigError, QWalksError, ValidationFailure
from qwalks.src.export import (
    KERNEL_SCHEMA,
    SUMMARY_SCHEMA,
    TILINGS_SCHEMA,
    BoundaryPlot,
    split_branches,
    write_csv,
    write_json,
    write_trajectory,
)
from qwalks.src.kernel import SpaceTimePoint, correlation_det, kernel_loz_lim, kernel_walks
from qwalks.src.options import (
    DEFAULT_OPTIONS_PATH,
    GridWindow,
    Options,
    RunConfig,
    load_options,
    read_config_file,
)
from qwalks.src.suites import SUITES
from qwalks.src.tilings import Partition, TilingEnsemble
from qwalks.src.utils import trajectory_rng
from qwalks.src.walks import Trajectory, WalkConfig, sample_trajectory

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)
REFINED_TOL_FLOOR = 1e-14
SCALING_SIZES = (25, 50, 100)


def _int_list(ctx, param, value: Optional[str]) -> Optional[list[int]]:
    if value is None:
        return None
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError as err:
        raise click.BadParameter(f"expected comma separated integers, got {value!r}") from err


def _float_list(ctx, param, value: Optional[str]) -> Optional[list[float]]:
    if value is None:
        return None
    try:
        return [float(part) for part in value.split(",") if part.strip()]
    except ValueError as err:
        raise click.BadParameter(f"expected comma separated numbers, got {value!r}") from err


def _points(ctx, param, values: Sequence[str]) -> list[tuple[int, int]]:
    points = []
    for value in values:
        try:
            first, second = (int(part) for part in value.split(","))
        except ValueError as err:
            raise click.BadParameter(f"expected a point 'a,b', got {value!r}") from err
        points.append((first, second))
    return points


def run_options(func: Callable) -> Callable:
    """Flags shared by every subcommand"""
    decorators = [
        click.option("--q", type=float, help="Deformation parameter in (0, 1)."),
        click.option("--gamma", type=float, help="With --m, sets q = exp(-gamma/m)."),
        click.option("--m", type=int, help="Number of walks."),
        click.option("--seed", type=int, help="Base seed of the random streams."),
        click.option("--out", type=click.Path(file_okay=False, path_type=Path), help="Output directory."),
        click.option("--tol", type=float, help="Absolute tolerance of numerical routines."),
        click.option("--threads", type=int, help="Worker pool size."),
        click.option("--method", type=click.Choice([Method.QUADRATURE, Method.RESIDUES]), help="Contour integral evaluation."),
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="key = value file; flags override it."),
    ]
    for decorator in reversed(decorators):
        func = decorator(func)
    return func


def handles_errors(func: Callable) -> Callable:
    """Library errors end the command with their exit code"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except QWalksError as err:
            logger.error("%s failed: %s", ctx.info_name, err, exc_info=True)
            click.echo(f"Error ({err.__class__.__name__}): {err}", err=True)
            ctx.exit(err.exit_code)

    return wrapper


def build_config(options: Options, config_path: Optional[str], **flags) -> RunConfig:
    """Options defaults, then the config file, then the flags"""
    values: dict[str, Any] = {
        "tol": options.tol,
        "threads": options.threads,
        "method": options.kernel_method,
        "sampler": options.sampler,
        "step_cap": options.step_cap,
        "enumeration_cap": options.enumeration_cap,
    }
    window = {}
    if config_path is not None:
        file_values = read_config_file(config_path)
        window.update(file_values.pop("window", {}))
        values.update(file_values)
    for field in GridWindow.__fields__:
        if flags.get(field) is not None:
            window[field] = flags.pop(field)
        flags.pop(field, None)
    values.update({key: value for key, value in flags.items() if value is not None})
    if window:
        values["window"] = {**GridWindow().dict(), **window}
    config = RunConfig.build(**values)
    logger.debug("Run configuration: %s", config.serialize())
    return config


def profile_from(config: RunConfig) -> ClusterProfile:
    """Cluster profile of the run; gamma falls back to -m log q"""
    if config.a is None or config.C is None:
        raise ConfigError("This command needs a cluster profile (--a and --C)")
    gamma = config.gamma
    if gamma is None and config.q is not None and config.m is not None:
        gamma = -config.m * math.log(config.q)
    if gamma is None:
        raise ConfigError("The cluster profile needs --gamma (or --q with --m)")
    try:
        return ClusterProfile(a=config.a, C=config.C, gamma=gamma)
    except ValidationError as err:
        raise ConfigError(f"Invalid cluster profile: {err}") from err


def kernel_kwargs(options: Options, config: RunConfig) -> dict[str, Any]:
    return {
        "tol": config.tol,
        "method": config.method,
        "node_cap": options.node_cap,
        "dps": options.mp_dps,
        "dps_cap": options.mp_dps_cap,
        "qpoch_tol": options.qpoch_tol,
    }


@click.group()
@click.option("--log-level", default=None, help="Overrides the log level of the options file.")
@click.option("--options", "options_path", default=DEFAULT_OPTIONS_PATH, show_default=True, help="Application options JSON.")
@click.pass_context
def cli(ctx: click.Context, log_level: Optional[str], options_path: str):
    """Noncolliding q-exchangeable random walks and their lozenge tiling limits."""
    options = load_options(options_path)
    logging.basicConfig(level=(log_level or options.log_level).upper(), format=LOG_FORMAT)
    ctx.obj = options


def _one_trajectory(
    x: WalkConfig, q: float, seed: int, index: int, config: RunConfig
) -> Trajectory:
    return sample_trajectory(
        x,
        q,
        trajectory_rng(seed, index),
        config.step_cap,
        config.sampler,
        seed,
        enumeration_cap=config.enumeration_cap,
    )


def run_trajectories(
    x: WalkConfig, config: RunConfig, count: int, desc: str
) -> list[Trajectory]:
    """`count` independent runs from x; stream i is (seed, i) whatever the pool size"""
    q = config.resolved_q
    jobs = (
        joblib.delayed(_one_trajectory)(x, q, config.seed, index, config)
        for index in tqdm(range(count), desc=desc, leave=False)
    )
    return joblib.Parallel(n_jobs=config.threads)(jobs)


def summarize(times: Sequence[int]) -> dict[str, Any]:
    values = np.asarray(times, dtype=float)
    return {
        "count": int(values.size),
        "mean": float(values.mean()),
        "std": float(values.std(ddof=1)) if values.size > 1 else 0.0,
        "quantiles": {str(level): float(np.quantile(values, level)) for level in QUANTILES},
    }


def starting_config(config: RunConfig) -> WalkConfig:
    if config.x is not None:
        if config.m is not None and config.m != len(config.x):
            raise ConfigError(f"--m {config.m} does not match x of length {len(config.x)}")
        return WalkConfig(config.x)
    if config.m is not None and config.a is not None:
        return realize_initial_config(profile_from(config), config.m)
    raise ConfigError("simulate needs --x or a cluster profile with --m")


@cli.command()
@run_options
@click.option("--x", callback=_int_list, help="Initial configuration, e.g. 7,6,3,1.")
@click.option("--a", callback=_float_list, help="Cluster breakpoints 0 = a_0 < ... < a_L = 1.")
@click.option("--C", "C", callback=_float_list, help="Cluster offsets C_1 < ... < C_L.")
@click.option("--seeds", type=int, help="Number of independent runs.")
@click.option("--sampler", type=click.Choice([Sampler.AUTO, Sampler.ENUMERATION, Sampler.DETERMINANT]))
@click.option("--keep", type=int, default=1, show_default=True, help="Runs written out as trajectory files.")
@click.option("--scaling", is_flag=True, help="Also run the absorption-time experiment over m = 25, 50, 100.")
@click.pass_obj
@handles_errors
def simulate(options: Options, config_path, keep: int, scaling: bool, **flags):
    """Sample trajectories until absorption and summarize absorption times."""
    config = build_config(options, config_path, **flags)
    x = starting_config(config)
    q = config.resolved_q
    logger.info("Simulating %d runs from %s at q=%.6g", config.seeds, x.parts, q)
    trajectories = run_trajectories(x, config, config.seeds, "runs")
    for index, trajectory in enumerate(trajectories[:keep]):
        write_trajectory(trajectory, config.out, f"trajectory_{index:05d}")
    times = [trajectory.absorption_time for trajectory in trajectories]
    write_csv(config.out / "absorption_times.csv", ("run", "t_abs"), enumerate(times))
    summary = summarize(times)
    write_json(config.out / "summary.json", summary, SUMMARY_SCHEMA)
    click.echo(f"{summary['count']} runs, mean absorption time {summary['mean']:.6g}")
    if scaling:
        scaling_experiment(config)


def scaling_experiment(config: RunConfig):
    """t_abs / m against log m for growing m at fixed gamma"""
    profile = profile_from(config)
    rows = []
    for m in SCALING_SIZES:
        q = math.exp(-profile.gamma / m)
        sized = config.copy(update={"q": q, "gamma": None, "m": m})
        x = realize_initial_config(profile, m)
        times = [t.absorption_time for t in run_trajectories(x, sized, config.seeds, f"m={m}")]
        mean = float(np.mean(times))
        logger.info("m=%d: mean absorption time %.6g", m, mean)
        rows.append((m, q, len(times), mean, mean / m, math.log(m)))
    write_csv(
        config.out / "absorption_scaling.csv",
        ("m", "q", "count", "mean_t_abs", "t_abs_over_m", "log_m"),
        rows,
    )


def _entry_with_error(
    evaluate: Callable[..., complex], pt1, pt2, x: WalkConfig, q: float, kwargs: dict[str, Any]
) -> tuple[complex, float]:
    """The entry at a tolerance 100 times tighter, and how far it moved"""
    value = evaluate(pt1, pt2, x, q, **kwargs)
    tighter = {**kwargs, "tol": max(kwargs["tol"] * 1e-2, REFINED_TOL_FLOOR)}
    refined = evaluate(pt1, pt2, x, q, **tighter)
    return refined, abs(refined - value)


@cli.command()
@run_options
@click.option("--x", callback=_int_list, required=True, help="Initial configuration.")
@click.option("--point", "points", multiple=True, callback=_points, help="Space-time point y,t (or p,t); repeatable.")
@click.option("--limit", is_flag=True, help="Evaluate the N -> infinity lozenge kernel instead of the walk kernel.")
@click.pass_obj
@handles_errors
def kernel(options: Options, config_path, points: list[tuple[int, int]], limit: bool, **flags):
    """Kernel entries between every ordered pair of the given points."""
    config = build_config(options, config_path, **flags)
    if not points:
        raise ConfigError("kernel needs at least one --point")
    x = WalkConfig(config.x)
    q = config.resolved_q
    kwargs = kernel_kwargs(options, config)
    evaluate = kernel_loz_lim if limit else kernel_walks
    pairs = [(pt1, pt2) for pt1 in points for pt2 in points]
    results = joblib.Parallel(n_jobs=config.threads, prefer="threads")(
        joblib.delayed(_entry_with_error)(evaluate, pt1, pt2, x, q, kwargs) for pt1, pt2 in pairs
    )
    document = {
        "x": list(x.parts),
        "q": q,
        "method": config.method,
        "kernel": "loz_lim" if limit else "walks",
        "entries": [
            {"pt1": list(pt1), "pt2": list(pt2), "re": value.real, "im": value.imag, "est_error": error}
            for (pt1, pt2), (value, error) in zip(pairs, results)
        ],
    }
    if not limit and len(set(points)) == len(points):
        document["correlation"] = correlation_det(
            [SpaceTimePoint(*point) for point in points], x, q, config.threads, **kwargs
        )
    path = write_json(config.out / "kernel.json", document, KERNEL_SCHEMA)
    click.echo(f"Wrote {len(pairs)} kernel entries to {path}")


@cli.command()
@run_options
@click.option("--a", callback=_float_list, help="Cluster breakpoints 0 = a_0 < ... < a_L = 1.")
@click.option("--C", "C", callback=_float_list, help="Cluster offsets C_1 < ... < C_L.")
@click.option("--tau-min", type=float)
@click.option("--tau-max", type=float)
@click.option("--rho-min", type=float)
@click.option("--rho-max", type=float)
@click.option("--resolution", type=int, help="Grid points per axis of the liquid-region scan.")
@click.option("--scan/--no-scan", default=True, show_default=True, help="Also scan the window for the liquid region.")
@click.pass_obj
@handles_errors
def boundary(options: Options, config_path, scan: bool, **flags):
    """Frozen boundary and bounding polygon as CSV and layered SVG."""
    config = build_config(options, config_path, **flags)
    profile = profile_from(config)
    window = config.window
    points = frozen_boundary(profile, default_w_grid(profile))
    write_csv(config.out / "boundary.csv", ("w", "tau", "rho"), points)
    plot = BoundaryPlot((window.tau_min, window.tau_max, window.rho_min, window.rho_max))
    if scan:
        rows = scan_liquid_region(profile, window, config.threads)
        write_csv(config.out / "liquid_scan.csv", ScanRow._fields, rows)
        plot.add_markers("liquid", [(row.tau, row.rho) for row in rows if row.in_liquid], "#9ecae1")
    polygon = bounding_polygon(profile, window.tau_max)
    plot.add_polylines("bounding-polygon", [polygon + polygon[:1]], "#636363")
    branches = split_branches(points, plot)
    plot.add_polylines("frozen-boundary", branches, "#d62728")
    plot.write(config.out / "boundary.svg")
    click.echo(f"{len(points)} boundary points in {len(branches)} branches")


@cli.command()
@run_options
@click.option("--lambda", "lam", callback=_int_list, required=True, help="Top row, e.g. 2,1,0.")
@click.pass_obj
@handles_errors
def tilings(options: Options, config_path, **flags):
    """Every tiling with the given top row and its q^-volume probability."""
    config = build_config(options, config_path, **flags)
    ensemble = TilingEnsemble(Partition(config.lam), config.resolved_q)
    document = {
        "lambda": list(config.lam),
        "q": ensemble.q,
        "partition_function": ensemble.partition_function,
        "tilings": ensemble.serialize(),
    }
    path = write_json(config.out / "tilings.json", document, TILINGS_SCHEMA)
    click.echo(f"Wrote {len(ensemble.arrays)} tilings to {path}")


@cli.command("options")
@click.option("--out", "out_path", default=DEFAULT_OPTIONS_PATH, show_default=True, help="Where to write the options JSON.")
@click.pass_obj
@handles_errors
def save_options(options: Options, out_path: str):
    """Write the effective options, QWALKS_* overrides included, as JSON."""
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    options.save(out_path)
    click.echo(f"Wrote options to {out_path}")


def report_table(reports) -> Table:
    table = Table(title="Validation")
    for column in ("Suite", "Check", "Value", "Threshold", "Status"):
        table.add_column(column)
    for report in reports:
        if report.error is not None:
            table.add_row(report.suite, "-", "-", "-", f"[red]error: {report.error}[/red]")
        for check in report.checks:
            status = "[green]pass[/green]" if check.passed else "[red]FAIL[/red]"
            table.add_row(report.suite, check.name, f"{check.value:.3e}", f"{check.threshold:.1e}", status)
    return table


@cli.command()
@click.argument("suite_names", nargs=-1, type=click.Choice(sorted(SUITES)))
@click.option("--slow", is_flag=True, help="Include the long-running suites when none are named.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("."), show_default=True)
@click.pass_obj
@handles_errors
def validate(options: Options, suite_names: tuple[str, ...], slow: bool, seed: int, threads: Optional[int], out: Path):
    """Run validation suites; exits with code 2 if any check fails."""
    names = suite_names or [name for name, suite in SUITES.items() if slow or not suite.slow]
    threads = threads or options.threads
    reports = [SUITES[name](options, seed, threads).run() for name in names]
    Console().print(report_table(reports))
    write_json(out / "validation.json", {"reports": [report.serialize() for report in reports]})
    failed = [report.suite for report in reports if not report.passed]
    if failed:
        raise ValidationFailure(f"Suites failed: {', '.join(failed)}")
    click.echo(f"All {len(reports)} suites passed")
