"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from seasondid import (
    DesignMatrix,
    DidSample,
    EstimationTask,
    IsoWeek,
    MonthDay,
    Outcome,
    PriceObservation,
    ProtectionCalendar,
    ProtectionWindow,
    Quality,
    SeriesSpec,
)


def week(year: int, number: int) -> IsoWeek:
    return IsoWeek(year, number)


def window(start: str, end: str) -> ProtectionWindow:
    return ProtectionWindow(MonthDay.parse(start), MonthDay.parse(end))


def price_row(
    product: str,
    country: str,
    wk: IsoWeek,
    price: float,
    quality: Quality = Quality.CONVENTIONAL,
    region: str | None = None,
) -> PriceObservation:
    return PriceObservation(
        product=product,
        quality=quality,
        country=country,
        region=region,
        week=wk,
        price=price,
    )


def no_covariate_sample(y, d, t) -> DidSample:
    """A DidSample with an empty covariate block."""
    y = np.asarray(y, dtype=float)
    return DidSample(
        y=y,
        d=np.asarray(d, dtype=np.int8),
        t=np.asarray(t, dtype=np.int8),
        x=DesignMatrix(np.empty((y.shape[0], 0)), ()),
    )


def random_cell_sample(rng: np.random.Generator, lo: int = 3, hi: int = 12) -> DidSample:
    """Random 2x2 sample with cell sizes in [lo, hi] and distinct cell means."""
    sizes = rng.integers(lo, hi + 1, size=4)
    means = rng.normal(0.0, 5.0, size=4)
    y, d, t = [], [], []
    for (dd, tt), size, mean in zip(((1, 1), (1, 0), (0, 1), (0, 0)), sizes, means):
        y.extend(rng.normal(mean, 1.0, size))
        d.extend([dd] * size)
        t.extend([tt] * size)
    return no_covariate_sample(y, d, t)


def stratified_sample(
    rng: np.random.Generator, n_strata: int, lo: int = 3, hi: int = 12
) -> tuple[DidSample, np.ndarray]:
    """Random sample with stratum dummies as covariates; every (stratum,
    cell) combination is populated. Returns the sample and the stratum id
    per row."""
    y, d, t, strata = [], [], [], []
    for s in range(n_strata):
        for dd, tt in ((1, 1), (1, 0), (0, 1), (0, 0)):
            size = int(rng.integers(lo, hi + 1))
            y.extend(rng.normal(rng.normal(0.0, 5.0), 1.0, size))
            d.extend([dd] * size)
            t.extend([tt] * size)
            strata.extend([s] * size)
    strata = np.array(strata)
    columns = [
        (f"stratum_{s}", (strata == s).astype(float)) for s in range(1, n_strata)
    ]
    if columns:
        x = DesignMatrix.from_columns(columns)
    else:
        x = DesignMatrix(np.empty((len(y), 0)), ())
    sample = DidSample(
        y=np.asarray(y, dtype=float),
        d=np.asarray(d, dtype=np.int8),
        t=np.asarray(t, dtype=np.int8),
        x=x,
    )
    return sample, strata


def basic_task(
    outcome: Outcome = Outcome.LEVEL,
    product: str = "simulated-vegetable",
    control_country: str = "DE",
    **overrides,
) -> EstimationTask:
    defaults = dict(
        treated=SeriesSpec(product, Quality.CONVENTIONAL, "CH"),
        control=SeriesSpec(product, Quality.CONVENTIONAL, control_country),
        outcome=outcome,
        bootstrap_reps=0,
    )
    defaults.update(overrides)
    return EstimationTask(**defaults)


@pytest.fixture
def tomato_calendar() -> ProtectionCalendar:
    """One product protected May 10 .. Aug 31 (both dates mid-week in most
    years, so Boundary weeks exist)."""
    return ProtectionCalendar({"tomato": window("05-10", "08-31")})


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
