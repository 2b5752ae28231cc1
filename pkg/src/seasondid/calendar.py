"""Protection calendar: per-product month-day windows, repeated every year.

The calendar file is delimited text with one row per product::

    product,start_md,end_md

where ``start_md``/``end_md`` are ``MM-DD`` strings. An optional first line
equal to the canonical header is skipped. Windows must not wrap the year end
(``start_md < end_md``); wrapping windows are rejected at parse time.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path

from .errors import CalendarError, CalendarMissError
from .weeks import IsoWeek

_HEADER = ("product", "start_md", "end_md")


@dataclass(frozen=True, order=True)
class MonthDay:
    """A month-day pair, valid in at least one year (Feb 29 allowed)."""

    month: int
    day: int

    def __post_init__(self):
        try:
            dt.date(2000, self.month, self.day)  # 2000 is a leap year
        except ValueError as exc:
            raise CalendarError(f"invalid month-day {self.month:02d}-{self.day:02d}") from exc

    @classmethod
    def parse(cls, text: str) -> "MonthDay":
        parts = text.strip().split("-")
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise CalendarError(f"expected MM-DD, got {text!r}")
        return cls(int(parts[0]), int(parts[1]))

    def date_in(self, year: int) -> dt.date:
        """Materialize in ``year``; Feb 29 falls back to Feb 28 off leap years."""
        try:
            return dt.date(year, self.month, self.day)
        except ValueError:
            return dt.date(year, self.month, self.day - 1)

    def __str__(self) -> str:
        return f"{self.month:02d}-{self.day:02d}"


@dataclass(frozen=True)
class ProtectionWindow:
    """Annual protection period ``[start, end]``, inclusive on both ends."""

    start: MonthDay
    end: MonthDay

    def __post_init__(self):
        if not self.start < self.end:
            raise CalendarError(
                f"protection window must not wrap the year end: "
                f"start {self.start} is not before end {self.end}"
            )

    def contains(self, day: dt.date) -> bool:
        return (self.start.month, self.start.day) <= (day.month, day.day) <= (
            self.end.month,
            self.end.day,
        )

    def start_week(self, year: int) -> IsoWeek:
        """ISO week containing the window start in ``year``."""
        return IsoWeek.from_date(self.start.date_in(year))

    def end_week(self, year: int) -> IsoWeek:
        """ISO week containing the window end in ``year``."""
        return IsoWeek.from_date(self.end.date_in(year))


class ProtectionCalendar:
    """Lookup table from product name to its annual protection window."""

    def __init__(self, entries: dict[str, ProtectionWindow]):
        self._entries = dict(entries)

    def __contains__(self, product: str) -> bool:
        return product in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def products(self) -> list[str]:
        return sorted(self._entries)

    def window_for(self, product: str) -> ProtectionWindow:
        try:
            return self._entries[product]
        except KeyError:
            raise CalendarMissError(product) from None

    @classmethod
    def from_csv(cls, path: str | Path) -> "ProtectionCalendar":
        """Parse a calendar file; errors carry 1-based line numbers."""
        path = Path(path)
        entries: dict[str, ProtectionWindow] = {}
        first_line: dict[str, int] = {}
        problems: list[str] = []
        with path.open(newline="") as handle:
            for lineno, row in enumerate(csv.reader(handle), start=1):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if lineno == 1 and tuple(cell.strip() for cell in row) == _HEADER:
                    continue
                if len(row) != 3:
                    problems.append(f"{path.name}:{lineno}: expected 3 fields, got {len(row)}")
                    continue
                product = row[0].strip()
                if not product:
                    problems.append(f"{path.name}:{lineno}: empty product name")
                    continue
                if product in entries:
                    problems.append(
                        f"{path.name}:{lineno}: duplicate product {product!r} "
                        f"(first seen on line {first_line[product]})"
                    )
                    continue
                try:
                    window = ProtectionWindow(MonthDay.parse(row[1]), MonthDay.parse(row[2]))
                except CalendarError as exc:
                    problems.append(f"{path.name}:{lineno}: {exc}")
                    continue
                entries[product] = window
                first_line[product] = lineno
        if problems:
            raise CalendarError("invalid calendar file:\n" + "\n".join(problems))
        if not entries:
            raise CalendarError(f"calendar file {path.name} contains no entries")
        return cls(entries)
