"""seasondid: panel estimation of seasonal protection effects on weekly
producer prices.

The pipeline: ingest weekly price panels and a per-product protection
calendar, label weeks (Protected / Unprotected / Boundary) and seasons,
transform to standardized levels or week-to-week volatility, and estimate
the treated-cell effect by inverse-probability-weighted
difference-in-differences with stratified bootstrap inference. A synthetic
generator with a known injected effect closes the loop for validation.
"""

from .calendar import MonthDay, ProtectionCalendar, ProtectionWindow
from .did import (
    BiweekBasis,
    BootstrapResult,
    CovariateSpec,
    DidSample,
    EffectEstimate,
    EstimationTask,
    SeriesSpec,
    bootstrap_se,
    build_sample,
    cell_means_did,
    estimate_ipw_did,
    estimate_ols_did,
    propensity_report,
    two_sided_normal_p,
    with_inference,
)
from .diagnostics import (
    BiweekEffect,
    EffectAttributeRow,
    HeterogeneityResult,
    PhaseSummary,
    PlaceboResult,
    describe_distribution,
    heterogeneity_regression,
    offset_weeks,
    pretrend_placebo,
    rolling_biweekly_effects,
)
from .errors import (
    BootstrapDegenerateError,
    CalendarError,
    CalendarMissError,
    ConfigError,
    ConvergenceError,
    DegenerateOutcomeError,
    EmptyOverlapError,
    GlmError,
    InfeasibleSampleError,
    IngestError,
    RankError,
    SeasonDidError,
    SeparationError,
    TrimExhaustionError,
)
from .glm import DesignMatrix, FitResult, fit_logistic, fit_ols, prune_design
from .ingest import (
    AttributeRecord,
    IngestReport,
    PanelStore,
    read_attributes,
    read_prices,
    write_calendar,
    write_prices,
)
from .panel import (
    LabeledObservation,
    Outcome,
    PhaseLabel,
    PriceObservation,
    Quality,
    SeasonId,
    SeriesKey,
    apply_boundary_exclusion,
    assign_season,
    assign_season_week,
    label_panel,
    label_phase,
    label_week,
    season_start_week,
)
from .pipeline import TaskResult, prepare_outcome_rows, run_task, task_seed
from .simgen import SimConfig, build_calendar, generate_panel, true_effect
from .transforms import (
    OutcomeObservation,
    compute_volatility,
    restrict_to_production_weeks,
    standardize_prices,
)
from .weeks import IsoWeek, week_range, weeks_between

__version__ = "0.1.0"
