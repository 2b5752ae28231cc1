"""Command-line interface.

Subcommands::

    ingest         validate price and calendar files, print a summary
    simulate       generate a synthetic panel + calendar from a config file
    run            batch-estimate a task list, emit effects.csv + manifest
    pretrend       placebo pre-trend estimates per task
    describe       phase-level outcome summaries per country
    heterogeneity  regress estimated effects on product attributes

Exit codes: 0 success; 1 configuration or I/O problem; 2 at least one task
hard-failed (infeasible tasks are reported in the manifest but are not
failures). Rerunning with identical inputs and seed reproduces outputs
byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .calendar import ProtectionCalendar
from .config import RunConfig, expand_tasks, sim_config_from_file
from .diagnostics import (
    EffectAttributeRow,
    describe_distribution,
    heterogeneity_regression,
    pretrend_placebo,
)
from .did import EstimationTask, two_sided_normal_p
from .errors import (
    CalendarError,
    CalendarMissError,
    ConfigError,
    IngestError,
    InfeasibleSampleError,
    SeasonDidError,
)
from .ingest import (
    PanelStore,
    read_attributes,
    read_prices,
    write_calendar,
    write_prices,
)
from .panel import Outcome, Quality, apply_boundary_exclusion, label_panel
from .pipeline import prepare_outcome_rows, run_task, task_seed
from .simgen import build_calendar, generate_panel, true_effect
from .transforms import compute_volatility, standardize_prices

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_TASK_FAILURE = 2

EFFECTS_COLUMNS = (
    "product", "quality", "control_country", "outcome", "method", "atet", "se",
    "p", "n11", "n10", "n01", "n00", "trimmed", "reps", "seed",
)
PRETREND_COLUMNS = (
    "product", "quality", "control_country", "outcome", "atet", "se", "p",
    "n11", "n10", "n01", "n00", "seasons_used", "reps", "seed",
)
DESCRIBE_COLUMNS = ("country", "phase", "outcome", "mean", "q1", "median", "q3", "n")
HETEROGENEITY_COLUMNS = (
    "outcome", "subsample", "term", "coefficient", "se", "p", "n", "r_squared", "dropped",
)


def _fmt(value) -> str:
    """Deterministic cell formatting: shortest round-trip repr for floats."""
    if isinstance(value, float):
        return repr(float(value))  # plain float repr even for numpy scalars
    return str(value)


def _write_csv(path: Path, header: tuple[str, ...], rows: list[tuple]) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _write_manifest(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_inputs(config: RunConfig) -> tuple[PanelStore, ProtectionCalendar]:
    store, report = read_prices(config.prices, skip_bad_rows=config.skip_bad_rows)
    if report.rows_kept == 0:
        raise IngestError(f"{config.prices}: no usable price rows")
    calendar = ProtectionCalendar.from_csv(config.calendar)
    return store, calendar


# ---------------------------------------------------------------------------
# subcommands


def _cmd_ingest(args: argparse.Namespace) -> int:
    store, report = read_prices(args.prices, skip_bad_rows=args.skip_bad_rows)
    calendar = ProtectionCalendar.from_csv(args.calendar)
    print(f"price rows read:    {report.rows_read}")
    print(f"price rows kept:    {report.rows_kept} (skipped {report.rows_skipped})")
    for country in sorted(report.kept_by_country):
        print(f"  {country}: {report.kept_by_country[country]}")
    print(f"series:             {len(store.series())}")
    print(f"calendar products:  {len(calendar.products())}")
    missing = [p for p in store.products() if p not in calendar]
    if missing:
        print(f"products without a calendar entry: {', '.join(missing)}")
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = sim_config_from_file(args.config, seed_override=args.seed)
    treated, control, calendar = generate_panel(cfg)
    window = calendar.window_for(cfg.product)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_prices(out_dir / "prices.csv", treated + control)
    write_calendar(
        out_dir / "calendar.csv",
        {cfg.product: (str(window.start), str(window.end))},
    )
    config_echo = dataclasses.asdict(cfg)
    config_echo["quality"] = cfg.quality.value
    config_echo["common_trend"] = list(cfg.common_trend)
    _write_manifest(
        out_dir / "sim_manifest.json",
        {
            "version": __version__,
            "command": "simulate",
            "config": config_echo,
            "true_effect": true_effect(cfg),
            "n_treated": len(treated),
            "n_control": len(control),
        },
    )
    print(f"wrote {len(treated) + len(control)} price rows to {out_dir / 'prices.csv'}")
    print(f"true standardized-scale effect: {true_effect(cfg)!r}")
    return EXIT_OK


def _execute_task(payload: tuple) -> tuple[str, str, str, list[tuple]]:
    """Run one task; returns (key, status, detail, effects rows).

    Top-level function so process pools can pickle it.
    """
    task, store, calendar, methods, master_seed = payload
    if task.bootstrap_reps > 0:
        task = dataclasses.replace(task, seed=task_seed(master_seed, task.key()))
    try:
        result = run_task(task, store, calendar, methods=methods)
    except InfeasibleSampleError as exc:
        return task.key(), "infeasible", exc.reason, []
    except SeasonDidError as exc:
        return task.key(), "failed", f"{type(exc).__name__}: {exc}", []
    rows = []
    for estimate in result.estimates:
        rows.append(
            (
                task.treated.product,
                task.treated.quality.value,
                task.control.country,
                task.outcome.value,
                estimate.method,
                estimate.atet,
                estimate.se,
                estimate.p_value,
                *estimate.n_by_cell,
                estimate.n_trimmed,
                estimate.bootstrap_reps or 0,
                estimate.seed if estimate.seed is not None else (task.seed or 0),
            )
        )
    return task.key(), "ok", "", rows


def _cmd_run(args: argparse.Namespace) -> int:
    config = RunConfig.from_file(args.config).override(
        seed=args.seed,
        trim=args.trim,
        reps=args.reps,
        workers=args.workers,
        skip_bad_rows=args.skip_bad_rows or None,
    )
    store, calendar = _load_inputs(config)
    tasks = expand_tasks(config, store=store)
    tasks = sorted(tasks, key=lambda t: t.key())
    master_seed = config.seed if config.seed is not None else 0
    payloads = [(task, store, calendar, config.methods, master_seed) for task in tasks]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_execute_task, payloads))
    else:
        outcomes = [_execute_task(payload) for payload in payloads]

    effect_rows: list[tuple] = []
    statuses = []
    for key, status, detail, rows in outcomes:
        effect_rows.extend(rows)
        statuses.append(
            {"task": key, "status": status if not detail else f"{status}: {detail}"}
        )

    out_dir = config.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "effects.csv", EFFECTS_COLUMNS, effect_rows)
    _write_manifest(
        out_dir / "manifest.json",
        {
            "version": __version__,
            "command": "run",
            "seed": config.seed,
            "config": config.manifest_dict(),
            "tasks": statuses,
        },
    )
    n_failed = sum(1 for s in statuses if s["status"].startswith("failed"))
    n_infeasible = sum(1 for s in statuses if s["status"].startswith("infeasible"))
    print(
        f"{len(statuses)} tasks: {len(statuses) - n_failed - n_infeasible} ok, "
        f"{n_infeasible} infeasible, {n_failed} failed"
    )
    print(f"wrote {out_dir / 'effects.csv'}")
    return EXIT_TASK_FAILURE if n_failed else EXIT_OK


def _cmd_pretrend(args: argparse.Namespace) -> int:
    config = RunConfig.from_file(args.config).override(
        seed=args.seed,
        trim=args.trim,
        reps=args.reps,
        workers=args.workers,
        skip_bad_rows=args.skip_bad_rows or None,
    )
    if config.reps < 2:
        raise ConfigError("pretrend needs reps >= 2 for bootstrap inference")
    store, calendar = _load_inputs(config)
    tasks = sorted(expand_tasks(config, store=store), key=lambda t: t.key())
    master_seed = config.seed if config.seed is not None else 0
    rows: list[tuple] = []
    statuses = []
    n_failed = 0
    for task in tasks:
        seed = task_seed(master_seed, task.key() + "|pretrend")
        try:
            treated_rows, control_rows = prepare_outcome_rows(task, store, calendar)
            result = pretrend_placebo(
                task, treated_rows, control_rows, calendar, config.reps, seed
            )
        except InfeasibleSampleError as exc:
            statuses.append({"task": task.key(), "status": f"infeasible: {exc.reason}"})
            continue
        except SeasonDidError as exc:
            statuses.append(
                {"task": task.key(), "status": f"failed: {type(exc).__name__}: {exc}"}
            )
            n_failed += 1
            continue
        estimate = result.estimate
        rows.append(
            (
                task.treated.product,
                task.treated.quality.value,
                task.control.country,
                task.outcome.value,
                estimate.atet,
                estimate.se,
                estimate.p_value,
                *estimate.n_by_cell,
                result.seasons_used,
                estimate.bootstrap_reps,
                seed,
            )
        )
        statuses.append({"task": task.key(), "status": "ok"})
    out_dir = config.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "pretrends.csv", PRETREND_COLUMNS, rows)
    _write_manifest(
        out_dir / "pretrend_manifest.json",
        {
            "version": __version__,
            "command": "pretrend",
            "seed": config.seed,
            "config": config.manifest_dict(),
            "tasks": statuses,
        },
    )
    print(f"wrote {out_dir / 'pretrends.csv'} ({len(rows)} rows)")
    return EXIT_TASK_FAILURE if n_failed else EXIT_OK


def _cmd_describe(args: argparse.Namespace) -> int:
    config = RunConfig.from_file(args.config).override(
        skip_bad_rows=args.skip_bad_rows or None
    )
    store, calendar = _load_inputs(config)
    level_rows = []
    volatility_rows = []
    for key in store.series():
        labeled = label_panel(store.rows_for(key), calendar)
        level_rows.extend(
            apply_boundary_exclusion(standardize_prices(labeled), Outcome.LEVEL)
        )
        volatility_rows.extend(compute_volatility(labeled))
    rows: list[tuple] = []
    for outcome, outcome_rows in (
        (Outcome.LEVEL, level_rows),
        (Outcome.VOLATILITY, volatility_rows),
    ):
        for summary in describe_distribution(outcome_rows, outcome):
            rows.append(
                (
                    summary.country,
                    summary.phase.value,
                    summary.outcome.value,
                    summary.mean,
                    summary.q1,
                    summary.median,
                    summary.q3,
                    summary.n,
                )
            )
    out_dir = config.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "descriptives.csv", DESCRIBE_COLUMNS, rows)
    print(f"wrote {out_dir / 'descriptives.csv'} ({len(rows)} rows)")
    return EXIT_OK


def _cmd_heterogeneity(args: argparse.Namespace) -> int:
    attributes = read_attributes(args.attributes)
    by_key = {(a.product, a.quality, a.comparison): a for a in attributes}
    rows: list[EffectAttributeRow] = []
    missing: list[str] = []
    with Path(args.effects).open(newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or tuple(reader.fieldnames) != EFFECTS_COLUMNS:
            raise IngestError(
                f"{args.effects}: expected an effects table with columns "
                f"{','.join(EFFECTS_COLUMNS)}"
            )
        for record in reader:
            if record["method"] != args.method:
                continue
            quality = Quality.parse(record["quality"])
            key = (record["product"], quality, record["control_country"])
            attribute = by_key.get(key)
            if attribute is None:
                missing.append(f"{key[0]}/{quality}/{key[2]}")
                continue
            rows.append(
                EffectAttributeRow(
                    outcome=Outcome(record["outcome"]),
                    effect=float(record["atet"]),
                    conventional=1 if quality is Quality.CONVENTIONAL else 0,
                    germany=1 if record["control_country"] == "DE" else 0,
                    italy=1 if record["control_country"] == "IT" else 0,
                    harvested_once=attribute.harvested_once,
                    storability_weeks=attribute.storability_weeks,
                    market_share_pct=attribute.market_share_pct,
                    days_protection=attribute.days_protection,
                )
            )
    if missing:
        raise ConfigError(
            "no attribute row for estimated effects: " + ", ".join(sorted(set(missing)))
        )
    if not rows:
        raise ConfigError(f"no effect rows with method {args.method!r} to regress")
    results = heterogeneity_regression(rows)
    out_rows: list[tuple] = []
    for result in results:
        dropped = ";".join(result.fit.dropped_columns)
        for name in result.fit.column_names:
            coef = result.fit.coefficient(name)
            se = result.fit.standard_error(name)
            out_rows.append(
                (
                    result.outcome.value,
                    result.subsample,
                    name,
                    coef,
                    se,
                    two_sided_normal_p(coef, se),
                    result.n,
                    result.r_squared,
                    dropped,
                )
            )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "heterogeneity.csv", HETEROGENEITY_COLUMNS, out_rows)
    print(f"wrote {out_dir / 'heterogeneity.csv'} ({len(out_rows)} rows)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="key=value configuration file")
    parser.add_argument("--seed", type=int, default=None, help="override the master seed")
    parser.add_argument("--trim", type=float, default=None, help="override the trim threshold")
    parser.add_argument("--reps", type=int, default=None, help="override bootstrap replicates")
    parser.add_argument("--workers", type=int, default=None, help="parallel task workers")
    parser.add_argument(
        "--skip-bad-rows", action="store_true", help="drop invalid price rows instead of failing"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seasondid",
        description="Seasonal-protection effects on weekly producer prices",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    ingest = commands.add_parser("ingest", help="validate input files")
    ingest.add_argument("--prices", required=True)
    ingest.add_argument("--calendar", required=True)
    ingest.add_argument("--skip-bad-rows", action="store_true")
    ingest.set_defaults(func=_cmd_ingest)

    simulate = commands.add_parser("simulate", help="generate a synthetic panel")
    simulate.add_argument("--config", required=True, help="generator key=value file")
    simulate.add_argument("--out", required=True, help="output directory")
    simulate.add_argument("--seed", type=int, default=None, help="override the generator seed")
    simulate.set_defaults(func=_cmd_simulate)

    run = commands.add_parser("run", help="batch-estimate the task list")
    _add_run_flags(run)
    run.set_defaults(func=_cmd_run)

    pretrend = commands.add_parser("pretrend", help="pre-trend placebo per task")
    _add_run_flags(pretrend)
    pretrend.set_defaults(func=_cmd_pretrend)

    describe = commands.add_parser("describe", help="phase-level outcome summaries")
    _add_run_flags(describe)
    describe.set_defaults(func=_cmd_describe)

    heterogeneity = commands.add_parser(
        "heterogeneity", help="regress effects on product attributes"
    )
    heterogeneity.add_argument("--effects", required=True, help="effects.csv from a run")
    heterogeneity.add_argument("--attributes", required=True, help="product attribute file")
    heterogeneity.add_argument("--out", required=True, help="output directory")
    heterogeneity.add_argument("--method", default="ipw", choices=("ipw", "ols"))
    heterogeneity.set_defaults(func=_cmd_heterogeneity)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, IngestError, CalendarError, CalendarMissError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SeasonDidError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TASK_FAILURE


if __name__ == "__main__":
    sys.exit(main())
