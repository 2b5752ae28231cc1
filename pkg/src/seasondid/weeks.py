"""ISO-8601 week arithmetic.

All panel observations are keyed by ISO year/week pairs. Weeks are
materialized through :func:`datetime.date.fromisocalendar`, so 53-week years
are handled by the standard library rather than by hand-rolled rules.
"""

from __future__ import annotations

import datetime as dt
import functools
from dataclasses import dataclass

from .errors import ConfigError

_ONE_WEEK = dt.timedelta(days=7)


@functools.total_ordering
@dataclass(frozen=True)
class IsoWeek:
    """One ISO-8601 calendar week, ordered chronologically."""

    year: int
    week: int

    def __post_init__(self):
        try:
            dt.date.fromisocalendar(self.year, self.week, 1)
        except ValueError as exc:
            raise ConfigError(f"invalid ISO week {self.year}-W{self.week:02d}: {exc}") from exc

    def __lt__(self, other: "IsoWeek") -> bool:
        return (self.year, self.week) < (other.year, other.week)

    def __str__(self) -> str:
        return f"{self.year}-W{self.week:02d}"

    @classmethod
    def from_date(cls, day: dt.date) -> "IsoWeek":
        iso = day.isocalendar()
        return cls(iso[0], iso[1])

    @staticmethod
    def weeks_in_year(year: int) -> int:
        # ISO years have 53 weeks iff Dec 28 falls in week 53.
        return dt.date(year, 12, 28).isocalendar()[1]

    def monday(self) -> dt.date:
        return dt.date.fromisocalendar(self.year, self.week, 1)

    def sunday(self) -> dt.date:
        return dt.date.fromisocalendar(self.year, self.week, 7)

    def days(self) -> tuple[dt.date, ...]:
        first = self.monday()
        return tuple(first + dt.timedelta(days=i) for i in range(7))

    def offset(self, n: int) -> "IsoWeek":
        return IsoWeek.from_date(self.monday() + n * _ONE_WEEK)

    def next(self) -> "IsoWeek":
        return self.offset(1)

    def prev(self) -> "IsoWeek":
        return self.offset(-1)


def weeks_between(start: IsoWeek, end: IsoWeek) -> int:
    """Signed number of weeks from ``start`` to ``end`` (0 when equal)."""
    return (end.monday() - start.monday()).days // 7


def week_range(first: IsoWeek, last: IsoWeek) -> list[IsoWeek]:
    """All weeks from ``first`` through ``last``, inclusive."""
    if last < first:
        raise ConfigError(f"week range runs backwards: {first} > {last}")
    return [first.offset(i) for i in range(weeks_between(first, last) + 1)]
