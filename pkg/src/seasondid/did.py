"""Difference-in-differences estimators on the 2x2 (series, phase) design.

``D`` marks the treated series (1) versus the control series (0); ``T``
marks Protected weeks (1) versus Unprotected weeks (0). The target is the
average treatment effect on the treated cell (D=1, T=1).

Two estimators share one sample type:

* ``estimate_ipw_did``: inverse-probability weighting with three pairwise
  logistic propensities of (1,1) membership against each comparison cell
  (1,0), (0,1), (0,0) on the covariates. Comparison observations are
  weighted by odds rho/(1 - rho), normalized within their cell; those with
  rho above the trim threshold are dropped before normalization.
* ``estimate_ols_did``: the interaction coefficient from
  ``y ~ const + D + T + D:T + covariates`` with classical standard errors.

Inference for the IPW estimator comes from a nonparametric bootstrap that
resamples observations independently within each of the four cells.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .calendar import ProtectionCalendar
from .errors import (
    ConfigError,
    GlmError,
    BootstrapDegenerateError,
    InfeasibleSampleError,
    TrimExhaustionError,
)
from .glm import INTERCEPT_NAME, DesignMatrix, fit_logistic, fit_ols
from .panel import Outcome, Quality, season_start_week
from .transforms import OutcomeObservation
from .weeks import weeks_between

# z such that the standard normal leaves 2.5% in each tail
Z_975 = 1.959963984540054

CELL_ORDER = ((1, 1), (1, 0), (0, 1), (0, 0))
COMPARISON_CELLS = ((1, 0), (0, 1), (0, 0))


class CovariateSpec(str, enum.Enum):
    NONE = "none"
    SEASONAL = "seasonal_fe"
    SEASONAL_BIWEEKLY = "seasonal_plus_biweekly_fe"


class BiweekBasis(str, enum.Enum):
    SEASON = "season"    # biweek index counted from the season start week
    CALENDAR = "calendar"  # biweek index from the ISO week number


@dataclass(frozen=True)
class SeriesSpec:
    """Which observations make up one side of the contrast. ``region=None``
    pools every region of the (product, quality, country) triple."""

    product: str
    quality: Quality
    country: str
    region: str | None = None

    def __str__(self) -> str:
        region = f"/{self.region}" if self.region else ""
        return f"{self.product}[{self.quality}]@{self.country}{region}"


@dataclass(frozen=True)
class EstimationTask:
    """One treated-versus-control estimation request."""

    treated: SeriesSpec
    control: SeriesSpec
    outcome: Outcome
    covariates: CovariateSpec = CovariateSpec.SEASONAL
    trim_threshold: float = 0.95
    bootstrap_reps: int = 200
    seed: int | None = None
    min_cell: int = 4
    biweek_basis: BiweekBasis = BiweekBasis.SEASON
    trim_treated: bool = False

    def __post_init__(self):
        if not 0.0 < self.trim_threshold <= 1.0:
            raise ConfigError(f"trim threshold must be in (0, 1], got {self.trim_threshold}")
        if self.bootstrap_reps < 0:
            raise ConfigError(f"bootstrap reps must be >= 0, got {self.bootstrap_reps}")
        if self.min_cell < 1:
            raise ConfigError(f"min_cell must be >= 1, got {self.min_cell}")
        if self.treated.quality is not self.control.quality:
            raise ConfigError(
                f"treated and control series must share a quality: "
                f"{self.treated} vs {self.control}"
            )

    def key(self) -> str:
        """Stable identifier used for ordering and per-task seeding."""
        parts = [
            self.treated.product,
            self.treated.quality.value,
            self.treated.country,
            self.treated.region or "",
            self.control.product,
            self.control.country,
            self.control.region or "",
            self.outcome.value,
        ]
        return "|".join(parts)


@dataclass(frozen=True)
class DidSample:
    """Estimation-ready outcome panel for one task.

    ``x`` holds covariate columns only (no intercept, no D/T terms);
    estimators add what they need.
    """

    y: np.ndarray
    d: np.ndarray
    t: np.ndarray
    x: DesignMatrix

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        d = np.asarray(self.d, dtype=np.int8)
        t = np.asarray(self.t, dtype=np.int8)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "t", t)
        n = y.shape[0]
        if d.shape[0] != n or t.shape[0] != n or self.x.values.shape[0] != n:
            raise ValueError("y, d, t and x must have the same number of rows")
        if not np.isin(d, (0, 1)).all() or not np.isin(t, (0, 1)).all():
            raise ValueError("d and t must be 0/1 indicators")

    @property
    def n_obs(self) -> int:
        return self.y.shape[0]

    def cell_mask(self, d: int, t: int) -> np.ndarray:
        return (self.d == d) & (self.t == t)

    def cell_counts(self) -> tuple[int, int, int, int]:
        """Observation counts in cell order (1,1), (1,0), (0,1), (0,0)."""
        return tuple(int(self.cell_mask(d, t).sum()) for d, t in CELL_ORDER)

    def validate_cells(self, min_cell: int = 1) -> None:
        for (d, t), count in zip(CELL_ORDER, self.cell_counts()):
            if count == 0:
                raise InfeasibleSampleError(
                    f"empty_cell(D={d},T={t})",
                    "no observations in this (series, phase) cell",
                )
        if min_cell > 1:
            for (d, t), count in zip(CELL_ORDER, self.cell_counts()):
                if count < min_cell:
                    raise InfeasibleSampleError(
                        f"small_cell(D={d},T={t})",
                        f"cell has {count} observations, need at least {min_cell}",
                    )

    def take(self, rows: np.ndarray) -> "DidSample":
        return DidSample(self.y[rows], self.d[rows], self.t[rows], self.x.take(rows))


@dataclass(frozen=True)
class EffectEstimate:
    """A point estimate with inference and sample bookkeeping.

    ``method`` is "ipw", "ols" or "means". Cell tuples follow the order
    (1,1), (1,0), (0,1), (0,0). ``p_value`` always refers the statistic
    atet/se to a two-sided standard normal.
    """

    method: str
    atet: float
    se: float
    p_value: float
    n_by_cell: tuple[int, int, int, int]
    n_trimmed_by_cell: tuple[int, int, int, int] = (0, 0, 0, 0)
    ci_normal: tuple[float, float] | None = None
    ci_percentile: tuple[float, float] | None = None
    bootstrap_reps: int | None = None
    bootstrap_failures: int | None = None
    seed: int | None = None

    @property
    def n_trimmed(self) -> int:
        return sum(self.n_trimmed_by_cell)


@dataclass(frozen=True)
class BootstrapResult:
    se: float
    p_value: float
    ci_normal: tuple[float, float]
    ci_percentile: tuple[float, float]
    replicates: int
    failures: int


@dataclass(frozen=True)
class PropensityReport:
    """Propensity diagnostics for one comparison cell: the absolute row
    indices of that cell's observations and their fitted probability of
    belonging to the treated-protected cell."""

    cell: tuple[int, int]
    rows: np.ndarray
    rho: np.ndarray

    def trim_mask(self, threshold: float) -> np.ndarray:
        """True where the observation would be trimmed at ``threshold``."""
        return self.rho > threshold


def two_sided_normal_p(estimate: float, se: float) -> float:
    """p-value of ``estimate / se`` against a two-sided standard normal."""
    if se == 0.0 or not math.isfinite(se):
        return 1.0 if estimate == 0.0 else 0.0
    return math.erfc(abs(estimate / se) / math.sqrt(2.0))


def cell_means_did(sample: DidSample) -> float:
    """Plain 2x2 cell-means DiD: (Y11 - Y10) - (Y01 - Y00)."""
    sample.validate_cells()
    means = [float(sample.y[sample.cell_mask(d, t)].mean()) for d, t in CELL_ORDER]
    return means[0] - means[1] - (means[2] - means[3])


def propensity_report(sample: DidSample) -> dict[tuple[int, int], PropensityReport]:
    """Fit the three pairwise propensities and report rho per comparison row.

    Each comparison cell g gets its own logistic fit of (1,1)-membership on
    the pooled (1,1) and g observations, using an intercept plus the sample
    covariates.
    """
    sample.validate_cells()
    reports = {}
    treated_rows = np.flatnonzero(sample.cell_mask(1, 1))
    for d, t in COMPARISON_CELLS:
        comparison_rows = np.flatnonzero(sample.cell_mask(d, t))
        pooled = np.concatenate([treated_rows, comparison_rows])
        membership = np.concatenate(
            [np.ones(treated_rows.size), np.zeros(comparison_rows.size)]
        )
        columns = np.hstack(
            [np.ones((pooled.size, 1)), sample.x.values[pooled]]
        )
        design = DesignMatrix(columns, (INTERCEPT_NAME, *sample.x.names))
        fit = fit_logistic(design, membership)
        reports[(d, t)] = PropensityReport(
            cell=(d, t),
            rows=comparison_rows,
            rho=fit.fitted[treated_rows.size:],
        )
    return reports


def estimate_ipw_did(
    sample: DidSample,
    trim_threshold: float = 0.95,
    trim_treated: bool = False,
) -> EffectEstimate:
    """IPW DiD point estimate; standard errors come from ``bootstrap_se``.

    Comparison observations with rho above ``trim_threshold`` are dropped
    before weights are normalized. With ``trim_treated`` the trimming is
    applied on the treated-protected side instead: (1,1) observations whose
    rho exceeds the threshold in any pairwise fit are dropped from the
    treated mean, and comparison cells stay intact.
    """
    if not 0.0 < trim_threshold <= 1.0:
        raise ConfigError(f"trim threshold must be in (0, 1], got {trim_threshold}")
    reports = propensity_report(sample)
    treated_rows = np.flatnonzero(sample.cell_mask(1, 1))

    trimmed = {cell: 0 for cell in CELL_ORDER}
    weighted_means = {}
    treated_drop = np.zeros(treated_rows.size, dtype=bool)
    for cell in COMPARISON_CELLS:
        report = reports[cell]
        if trim_treated:
            keep = np.ones(report.rho.size, dtype=bool)
        else:
            keep = ~report.trim_mask(trim_threshold)
            trimmed[cell] = int(report.rho.size - keep.sum())
            if not keep.any():
                raise TrimExhaustionError(
                    f"all {report.rho.size} observations of cell (D={cell[0]},T={cell[1]}) "
                    f"exceeded the trim threshold {trim_threshold}"
                )
        rho = report.rho[keep]
        weights = rho / (1.0 - rho)
        weights = weights / weights.sum()
        weighted_means[cell] = float(weights @ sample.y[report.rows[keep]])

    if trim_treated:
        for cell in COMPARISON_CELLS:
            fit = _treated_rho(sample, cell, treated_rows)
            treated_drop |= fit > trim_threshold
        trimmed[(1, 1)] = int(treated_drop.sum())
        if treated_drop.all():
            raise TrimExhaustionError(
                f"all {treated_rows.size} treated-protected observations exceeded "
                f"the trim threshold {trim_threshold}"
            )
    treated_mean = float(sample.y[treated_rows[~treated_drop]].mean())

    atet = (
        treated_mean
        - weighted_means[(1, 0)]
        - (weighted_means[(0, 1)] - weighted_means[(0, 0)])
    )
    return EffectEstimate(
        method="ipw",
        atet=atet,
        se=math.nan,
        p_value=math.nan,
        n_by_cell=sample.cell_counts(),
        n_trimmed_by_cell=tuple(trimmed[cell] for cell in CELL_ORDER),
    )


def _treated_rho(
    sample: DidSample, cell: tuple[int, int], treated_rows: np.ndarray
) -> np.ndarray:
    """Fitted (1,1)-membership probability of the treated rows in the
    pairwise fit against ``cell``."""
    comparison_rows = np.flatnonzero(sample.cell_mask(*cell))
    pooled = np.concatenate([treated_rows, comparison_rows])
    membership = np.concatenate([np.ones(treated_rows.size), np.zeros(comparison_rows.size)])
    columns = np.hstack([np.ones((pooled.size, 1)), sample.x.values[pooled]])
    design = DesignMatrix(columns, (INTERCEPT_NAME, *sample.x.names))
    return fit_logistic(design, membership).fitted[: treated_rows.size]


def estimate_ols_did(sample: DidSample) -> EffectEstimate:
    """DiD as the D:T interaction in an OLS regression with covariates."""
    sample.validate_cells()
    columns = [
        (INTERCEPT_NAME, np.ones(sample.n_obs)),
        ("d", sample.d.astype(float)),
        ("t", sample.t.astype(float)),
        ("d_t", (sample.d * sample.t).astype(float)),
    ]
    columns += [(name, sample.x.values[:, j]) for j, name in enumerate(sample.x.names)]
    fit = fit_ols(DesignMatrix.from_columns(columns), sample.y)
    atet = fit.coefficient("d_t")
    se = fit.standard_error("d_t")
    return EffectEstimate(
        method="ols",
        atet=atet,
        se=se,
        p_value=two_sided_normal_p(atet, se),
        n_by_cell=sample.cell_counts(),
    )


def bootstrap_se(
    sample: DidSample,
    estimator,
    reps: int,
    seed: int,
) -> BootstrapResult:
    """Stratified nonparametric bootstrap of a DiD estimator.

    Observations are resampled with replacement independently within each of
    the four (D,T) cells, so no replicate loses a cell. Replicates where the
    estimator fails (separation, trim exhaustion, degenerate samples) are
    skipped and counted; more than 10% failures raises
    :class:`BootstrapDegenerateError`. Replicate ``r`` draws its randomness
    from ``SeedSequence((seed, r))``, so results do not depend on scheduling
    or on other tasks.

    Returns the replicate standard deviation (ddof=1), the two-sided normal
    p-value of the full-sample estimate, and both normal and percentile 95%
    confidence intervals.
    """
    if reps < 2:
        raise ConfigError(f"bootstrap needs at least 2 replicates, got {reps}")
    point = float(estimator(sample))
    cells = [np.flatnonzero(sample.cell_mask(d, t)) for d, t in CELL_ORDER]
    estimates = []
    failures = 0
    for rep in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence((seed, rep)))
        rows = np.concatenate(
            [cell[rng.integers(0, cell.size, cell.size)] for cell in cells]
        )
        try:
            estimates.append(float(estimator(sample.take(rows))))
        except (GlmError, TrimExhaustionError, InfeasibleSampleError):
            failures += 1
    if failures > 0.1 * reps:
        raise BootstrapDegenerateError(
            f"{failures} of {reps} bootstrap replicates failed; "
            "the sample cannot support this estimator"
        )
    draws = np.asarray(estimates)
    se = float(draws.std(ddof=1))
    return BootstrapResult(
        se=se,
        p_value=two_sided_normal_p(point, se),
        ci_normal=(point - Z_975 * se, point + Z_975 * se),
        ci_percentile=(float(np.quantile(draws, 0.025)), float(np.quantile(draws, 0.975))),
        replicates=reps,
        failures=failures,
    )


def with_inference(estimate: EffectEstimate, boot: BootstrapResult, seed: int) -> EffectEstimate:
    """Merge bootstrap inference into a point estimate."""
    return replace(
        estimate,
        se=boot.se,
        p_value=boot.p_value,
        ci_normal=boot.ci_normal,
        ci_percentile=boot.ci_percentile,
        bootstrap_reps=boot.replicates,
        bootstrap_failures=boot.failures,
        seed=seed,
    )


def build_sample(
    task: EstimationTask,
    treated_rows: list[OutcomeObservation],
    control_rows: list[OutcomeObservation],
    calendar: ProtectionCalendar,
) -> DidSample:
    """Assemble the estimation sample for one task.

    Expects fully transformed rows (standardized or volatility, Boundary
    weeks excluded, control restricted to treated production weeks). Builds
    D/T indicators and the requested fixed-effect dummies, validates that
    all four cells meet ``task.min_cell``, and returns the sample.
    """
    rows = list(treated_rows) + list(control_rows)
    if any(row.phase.value == "boundary" for row in rows):
        raise ValueError("sample construction received Boundary rows")
    y = np.array([row.value for row in rows])
    d = np.array([1] * len(treated_rows) + [0] * len(control_rows), dtype=np.int8)
    t = np.array([1 if row.phase.value == "protected" else 0 for row in rows], dtype=np.int8)

    columns: list[tuple[str, np.ndarray]] = []
    if task.covariates in (CovariateSpec.SEASONAL, CovariateSpec.SEASONAL_BIWEEKLY):
        seasons = sorted({row.season.index for row in rows})
        for season in seasons[1:]:  # first season is the reference
            indicator = np.array(
                [1.0 if row.season.index == season else 0.0 for row in rows]
            )
            columns.append((f"season_{season}", indicator))
    if task.covariates is CovariateSpec.SEASONAL_BIWEEKLY:
        window = calendar.window_for(task.treated.product)
        if task.biweek_basis is BiweekBasis.SEASON:
            biweeks = [
                weeks_between(season_start_week(window, row.season.index), row.week) // 2 + 1
                for row in rows
            ]
        else:
            biweeks = [(row.week.week - 1) // 2 + 1 for row in rows]
        for biweek in sorted(set(biweeks))[1:]:  # first biweek is the reference
            indicator = np.array([1.0 if b == biweek else 0.0 for b in biweeks])
            columns.append((f"biweek_{biweek}", indicator))

    if columns:
        x = DesignMatrix.from_columns(columns)
    else:
        x = DesignMatrix(np.empty((len(rows), 0)), ())
    sample = DidSample(y=y, d=d, t=t, x=x)
    sample.validate_cells(task.min_cell)
    return sample
