"""Diagnostics around the main estimator.

* ``pretrend_placebo``: a falsification DiD in the run-up to protection,
  contrasting offsets {-2, -1} (pseudo-post) against {-4, -3} (pre). A
  significant estimate flags diverging pre-trends.
* ``rolling_biweekly_effects``: the effect profile over the protected phase,
  one cell-means DiD per biweek of protection against the last two
  pre-protection weeks.
* ``describe_distribution``: phase-level outcome summaries per country.
* ``heterogeneity_regression``: OLS of estimated effects on product
  attributes, pooled and per quality.

Offsets are counted in whole non-Boundary weeks walking back from the week
containing the protection start; Boundary weeks are skipped, not counted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calendar import ProtectionCalendar, ProtectionWindow
from .did import (
    DidSample,
    EffectEstimate,
    EstimationTask,
    bootstrap_se,
    cell_means_did,
    with_inference,
)
from .errors import InfeasibleSampleError
from .glm import DesignMatrix, FitResult, fit_ols
from .panel import Outcome, PhaseLabel, label_week
from .transforms import OutcomeObservation
from .weeks import IsoWeek

_MAX_OFFSET_WALK = 120


@dataclass(frozen=True)
class PlaceboResult:
    estimate: EffectEstimate
    seasons_used: int


@dataclass(frozen=True)
class BiweekEffect:
    biweek: int
    status: str  # "ok" or "infeasible"
    reason: str | None
    estimate: EffectEstimate | None
    seasons_used: int


@dataclass(frozen=True)
class PhaseSummary:
    country: str
    phase: PhaseLabel
    outcome: Outcome
    mean: float
    q1: float
    median: float
    q3: float
    n: int


@dataclass(frozen=True)
class EffectAttributeRow:
    """One estimated effect joined with its product's attributes."""

    outcome: Outcome
    effect: float
    conventional: int
    germany: int
    italy: int
    harvested_once: int
    storability_weeks: float
    market_share_pct: float
    days_protection: float


@dataclass(frozen=True)
class HeterogeneityResult:
    outcome: Outcome
    subsample: str  # "pooled", "conventional" or "organic"
    fit: FitResult
    n: int
    r_squared: float


def offset_weeks(window: ProtectionWindow, year: int, count: int) -> list[IsoWeek]:
    """The ``count`` whole non-Boundary weeks before the year's protection
    start, nearest first (offset -1, -2, ...). Boundary weeks are skipped.
    Returns fewer than ``count`` weeks if the walk runs into the previous
    protection phase."""
    collected: list[IsoWeek] = []
    week = window.start_week(year).prev()
    for _ in range(_MAX_OFFSET_WALK):
        label = label_week(window, week)
        if label is PhaseLabel.PROTECTED:
            break
        if label is PhaseLabel.UNPROTECTED:
            collected.append(week)
            if len(collected) == count:
                break
        week = week.prev()
    return collected


def _rows_by_week(rows: list[OutcomeObservation]) -> dict[IsoWeek, list[OutcomeObservation]]:
    index: dict[IsoWeek, list[OutcomeObservation]] = {}
    for row in rows:
        index.setdefault(row.week, []).append(row)
    return index


def _placebo_sample(
    treated_index: dict[IsoWeek, list[OutcomeObservation]],
    control_index: dict[IsoWeek, list[OutcomeObservation]],
    post_weeks: list[IsoWeek],
    pre_weeks: list[IsoWeek],
) -> tuple[list[float], list[int], list[int]]:
    """Collect (value, d, pseudo_t) triples for one season."""
    values, d, t = [], [], []
    for weeks, pseudo in ((post_weeks, 1), (pre_weeks, 0)):
        for week in weeks:
            for row in treated_index[week]:
                values.append(row.value)
                d.append(1)
                t.append(pseudo)
            for row in control_index[week]:
                values.append(row.value)
                d.append(0)
                t.append(pseudo)
    return values, d, t


def pretrend_placebo(
    task: EstimationTask,
    treated_rows: list[OutcomeObservation],
    control_rows: list[OutcomeObservation],
    calendar: ProtectionCalendar,
    reps: int,
    seed: int,
) -> PlaceboResult:
    """Placebo DiD on pre-protection weeks, pooled across seasons.

    Within each season, offsets {-2, -1} act as pseudo-post and {-4, -3} as
    pre. Seasons missing any of the four offset weeks in either series are
    dropped; with no usable season the sample is infeasible. No covariates;
    the point estimate is the exact 2x2 cell-means DiD and inference is the
    same stratified bootstrap as the main estimator.
    """
    window = calendar.window_for(task.treated.product)
    treated_index = _rows_by_week(treated_rows)
    control_index = _rows_by_week(control_rows)
    years = sorted(
        {row.season.index for row in treated_rows}
        | {row.season.index for row in control_rows}
    )
    values: list[float] = []
    d: list[int] = []
    t: list[int] = []
    seasons_used = 0
    for year in years:
        offsets = offset_weeks(window, year, 4)
        if len(offsets) < 4:
            continue
        if not all(w in treated_index and w in control_index for w in offsets):
            continue
        season_values, season_d, season_t = _placebo_sample(
            treated_index, control_index, offsets[:2], offsets[2:]
        )
        values += season_values
        d += season_d
        t += season_t
        seasons_used += 1
    if seasons_used == 0:
        raise InfeasibleSampleError(
            "pretrend_no_complete_season",
            "no season has both series observed at all four pre-protection offsets",
        )
    sample = DidSample(
        y=np.array(values),
        d=np.array(d, dtype=np.int8),
        t=np.array(t, dtype=np.int8),
        x=DesignMatrix(np.empty((len(values), 0)), ()),
    )
    point = cell_means_did(sample)
    boot = bootstrap_se(sample, cell_means_did, reps, seed)
    estimate = EffectEstimate(
        method="means",
        atet=point,
        se=float("nan"),
        p_value=float("nan"),
        n_by_cell=sample.cell_counts(),
    )
    return PlaceboResult(estimate=with_inference(estimate, boot, seed), seasons_used=seasons_used)


def _protected_weeks(window: ProtectionWindow, year: int) -> list[IsoWeek]:
    start = window.start_week(year)
    end = window.end_week(year)
    weeks = []
    week = start
    while not end < week:
        if label_week(window, week) is PhaseLabel.PROTECTED:
            weeks.append(week)
        week = week.next()
    return weeks


def rolling_biweekly_effects(
    task: EstimationTask,
    treated_rows: list[OutcomeObservation],
    control_rows: list[OutcomeObservation],
    calendar: ProtectionCalendar,
    reps: int,
    seed: int,
) -> list[BiweekEffect]:
    """Cell-means DiD per protected biweek against offsets {-2, -1}.

    Biweek b of a season covers protected weeks 2b-2 and 2b-1 (0-based; a
    trailing odd week forms a one-week biweek). A season enters biweek b's
    contrast only if both series are observed at both pre weeks and every
    week of that season's biweek b. Biweeks with no usable season are
    reported as infeasible markers rather than dropped silently.
    """
    window = calendar.window_for(task.treated.product)
    treated_index = _rows_by_week(treated_rows)
    control_index = _rows_by_week(control_rows)
    years = sorted(
        {row.season.index for row in treated_rows}
        | {row.season.index for row in control_rows}
    )
    season_pre: dict[int, list[IsoWeek]] = {}
    season_biweeks: dict[int, list[list[IsoWeek]]] = {}
    for year in years:
        pre = offset_weeks(window, year, 2)
        if len(pre) < 2:
            continue
        protected = _protected_weeks(window, year)
        season_pre[year] = pre
        season_biweeks[year] = [protected[i : i + 2] for i in range(0, len(protected), 2)]
    n_biweeks = max((len(chunks) for chunks in season_biweeks.values()), default=0)
    if n_biweeks == 0:
        raise InfeasibleSampleError(
            "rolling_no_protected_weeks",
            "no season has pre-protection offsets and protected weeks to compare",
        )

    results: list[BiweekEffect] = []
    for b in range(1, n_biweeks + 1):
        values: list[float] = []
        d: list[int] = []
        t: list[int] = []
        seasons_used = 0
        for year, chunks in season_biweeks.items():
            if len(chunks) < b:
                continue
            needed = chunks[b - 1] + season_pre[year]
            if not all(w in treated_index and w in control_index for w in needed):
                continue
            season_values, season_d, season_t = _placebo_sample(
                treated_index, control_index, chunks[b - 1], season_pre[year]
            )
            values += season_values
            d += season_d
            t += season_t
            seasons_used += 1
        if seasons_used == 0:
            results.append(
                BiweekEffect(
                    biweek=b,
                    status="infeasible",
                    reason="no_complete_season",
                    estimate=None,
                    seasons_used=0,
                )
            )
            continue
        sample = DidSample(
            y=np.array(values),
            d=np.array(d, dtype=np.int8),
            t=np.array(t, dtype=np.int8),
            x=DesignMatrix(np.empty((len(values), 0)), ()),
        )
        point = cell_means_did(sample)
        boot = bootstrap_se(sample, cell_means_did, reps, seed + b)
        estimate = EffectEstimate(
            method="means",
            atet=point,
            se=float("nan"),
            p_value=float("nan"),
            n_by_cell=sample.cell_counts(),
        )
        results.append(
            BiweekEffect(
                biweek=b,
                status="ok",
                reason=None,
                estimate=with_inference(estimate, boot, seed + b),
                seasons_used=seasons_used,
            )
        )
    return results


def describe_distribution(
    rows: list[OutcomeObservation], outcome: Outcome
) -> list[PhaseSummary]:
    """Phase-level summaries per country.

    First averages the outcome within each (country, product, quality,
    season, phase) unit, then summarizes those unit averages per country and
    phase with mean and quartiles. Output order is deterministic and
    independent of input order.
    """
    units: dict[tuple, list[float]] = {}
    for row in rows:
        key = (
            row.series.country,
            row.series.product,
            row.series.quality,
            row.series.region,
            row.season,
            row.phase,
        )
        units.setdefault(key, []).append(row.value)
    groups: dict[tuple[str, PhaseLabel], list[float]] = {}
    for (country, _, _, _, _, phase), values in units.items():
        groups.setdefault((country, phase), []).append(float(np.mean(values)))
    summaries = []
    for (country, phase) in sorted(groups, key=lambda k: (k[0], k[1].value)):
        values = np.array(sorted(groups[(country, phase)]))
        summaries.append(
            PhaseSummary(
                country=country,
                phase=phase,
                outcome=outcome,
                mean=float(values.mean()),
                q1=float(np.quantile(values, 0.25)),
                median=float(np.quantile(values, 0.5)),
                q3=float(np.quantile(values, 0.75)),
                n=int(values.size),
            )
        )
    return summaries


_ATTRIBUTE_COLUMNS = (
    "conventional",
    "germany",
    "italy",
    "harvested_once",
    "storability_weeks",
    "market_share_pct",
    "days_protection",
)


def heterogeneity_regression(rows: list[EffectAttributeRow]) -> list[HeterogeneityResult]:
    """OLS of estimated effects on product attributes.

    Six regressions: one per outcome for the pooled sample (with a
    conventional-quality dummy) and per quality subsample (without it).
    Degenerate columns are pruned and reported by the fitter; genuinely
    collinear attributes raise a rank error.
    """
    results = []
    for outcome in (Outcome.LEVEL, Outcome.VOLATILITY):
        outcome_rows = [row for row in rows if row.outcome is outcome]
        subsamples = (
            ("pooled", outcome_rows),
            ("conventional", [r for r in outcome_rows if r.conventional == 1]),
            ("organic", [r for r in outcome_rows if r.conventional == 0]),
        )
        for name, subset in subsamples:
            if not subset:
                continue
            y = np.array([r.effect for r in subset])
            columns = [("const", np.ones(len(subset)))]
            for attribute in _ATTRIBUTE_COLUMNS:
                if name != "pooled" and attribute == "conventional":
                    continue
                columns.append(
                    (attribute, np.array([float(getattr(r, attribute)) for r in subset]))
                )
            fit = fit_ols(DesignMatrix.from_columns(columns), y)
            residuals = y - fit.fitted
            centered = y - y.mean()
            tss = float(centered @ centered)
            r_squared = 1.0 - float(residuals @ residuals) / tss if tss > 0 else 0.0
            results.append(
                HeterogeneityResult(
                    outcome=outcome,
                    subsample=name,
                    fit=fit,
                    n=len(subset),
                    r_squared=r_squared,
                )
            )
    return results
