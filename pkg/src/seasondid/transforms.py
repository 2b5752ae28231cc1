"""Outcome transforms: standardized price levels and week-to-week volatility.

Pipeline order: label the raw panel, transform (this module), then apply the
boundary exclusion and production-week restriction to the transformed rows.
Standardization therefore uses every observed week of a season cell,
including Boundary weeks that are later excluded from estimation samples.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyOverlapError
from .panel import (
    LabeledObservation,
    PhaseLabel,
    SeasonId,
    SeriesKey,
)
from .weeks import IsoWeek, weeks_between


@dataclass(frozen=True)
class OutcomeObservation:
    """One transformed outcome value on the weekly grid."""

    series: SeriesKey
    week: IsoWeek
    season: SeasonId
    phase: PhaseLabel
    value: float


def standardize_prices(labeled: list[LabeledObservation]) -> list[OutcomeObservation]:
    """Standardized price levels: 100 * price / mean(price) per season cell.

    The cell is one (series, season) pair, i.e. each price series is scaled
    by its own unweighted season average, so within every cell the
    standardized values average exactly 100.
    """
    cells: dict[tuple[SeriesKey, SeasonId], list[LabeledObservation]] = {}
    for row in labeled:
        cells.setdefault((row.obs.series, row.season), []).append(row)
    out = []
    for rows in cells.values():
        mean = sum(r.obs.price for r in rows) / len(rows)
        for r in rows:
            out.append(
                OutcomeObservation(
                    series=r.obs.series,
                    week=r.obs.week,
                    season=r.season,
                    phase=r.phase,
                    value=100.0 * r.obs.price / mean,
                )
            )
    return out


def compute_volatility(labeled: list[LabeledObservation]) -> list[OutcomeObservation]:
    """Absolute week-to-week price changes |p_w / p_{w-1} - 1| on raw prices.

    A change is defined only when the two weeks are consecutive on the ISO
    grid and share the same non-Boundary phase label, so no change spans a
    phase transition or a gap. The change is recorded at the later week.
    Scale-free: rescaling a series by any positive constant leaves the
    output unchanged.
    """
    by_series: dict[SeriesKey, list[LabeledObservation]] = {}
    for row in labeled:
        by_series.setdefault(row.obs.series, []).append(row)
    out = []
    for rows in by_series.values():
        rows = sorted(rows, key=lambda r: r.obs.week)
        for prev, cur in zip(rows, rows[1:]):
            if weeks_between(prev.obs.week, cur.obs.week) != 1:
                continue
            if prev.phase is PhaseLabel.BOUNDARY or cur.phase is PhaseLabel.BOUNDARY:
                continue
            if prev.phase is not cur.phase:
                continue
            out.append(
                OutcomeObservation(
                    series=cur.obs.series,
                    week=cur.obs.week,
                    season=cur.season,
                    phase=cur.phase,
                    value=abs(cur.obs.price / prev.obs.price - 1.0),
                )
            )
    return out


def restrict_to_production_weeks(
    control: list[OutcomeObservation],
    treated: list[OutcomeObservation],
    product_map: dict[str, str] | None = None,
) -> list[OutcomeObservation]:
    """Keep control rows only for weeks where a matched treated row exists.

    A control row survives iff the treated panel has an observation with the
    mapped product, the same quality, and the same ISO week. ``product_map``
    translates control product names to treated product names; products not
    in the map match under their own name.
    """
    product_map = product_map or {}
    available = {(row.series.product, row.series.quality, row.week) for row in treated}
    kept = [
        row
        for row in control
        if (
            product_map.get(row.series.product, row.series.product),
            row.series.quality,
            row.week,
        )
        in available
    ]
    if control and not kept:
        control_names = sorted({str(row.series) for row in control})
        treated_names = sorted({str(row.series) for row in treated})
        raise EmptyOverlapError(
            "no control observation falls in a treated production week "
            f"(control {', '.join(control_names)}; treated {', '.join(treated_names)})"
        )
    return kept
