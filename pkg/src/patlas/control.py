"""Foreign-control analytics: patent-scope and inventor-control
classification, foreign-ownership shares with 3-year smoothing, and
five-year window averages.

Counting units: patent scope counts patents; inventor control counts
inventor listings (a person appearing on two patents counts twice, since
the records carry no person identity). Summaries merge by component-wise
addition, so per-patent classification parallelizes trivially.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .records import PartyAddress, PatentRecord

__all__ = [
    "ControlSummary",
    "InventorControl",
    "OwnershipSeries",
    "PatentScope",
    "classify_inventor_control",
    "classify_patent_scope",
    "control_summary",
    "five_year_averages",
    "foreign_ownership_share",
    "moving_average_3",
    "ownership_series",
    "write_control_csv",
    "write_ownership_csv",
    "write_window_csv",
]

logger = logging.getLogger(__name__)


class PatentScope(Enum):
    EXCLUSIVELY_DOMESTIC = "exclusively_domestic"
    INTERNATIONAL_COOPERATION = "international_cooperation"
    NO_INVENTOR_IN_COUNTRY = "no_inventor_in_country"


class InventorControl(Enum):
    FOREIGN_ASSIGNEE = "foreign"
    DOMESTIC_ASSIGNEE = "domestic"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ControlSummary:
    """Control-table column for one country."""

    country: str
    patents_international: int
    patents_domestic: int
    inventors_foreign: int
    inventors_domestic: int
    inventors_unknown: int

    @property
    def patents_total(self) -> int:
        return self.patents_international + self.patents_domestic

    @property
    def inventors_total(self) -> int:
        return self.inventors_foreign + self.inventors_domestic + self.inventors_unknown


@dataclass(frozen=True)
class OwnershipSeries:
    """Yearly foreign-ownership share plus its 3-year moving average."""

    country: str
    raw: dict[int, float]
    smoothed: dict[int, float]


def classify_patent_scope(record: PatentRecord, country: str) -> PatentScope:
    """Domestic when every inventor sits in the country, international
    when inventors straddle the border, excluded otherwise."""
    inside = sum(1 for a in record.inventors if a.country == country)
    if inside == 0:
        return PatentScope.NO_INVENTOR_IN_COUNTRY
    if inside == len(record.inventors):
        return PatentScope.EXCLUSIVELY_DOMESTIC
    return PatentScope.INTERNATIONAL_COOPERATION


def classify_inventor_control(record: PatentRecord, inventor: PartyAddress) -> InventorControl:
    """Who controls this inventor's output on this patent.

    Unknown when no assignee has a known country; domestic as soon as any
    assignee shares the inventor's country (a local assignee implies a
    local control channel); foreign otherwise.
    """
    known = [a.country for a in record.assignees if a.country]
    if not known:
        return InventorControl.UNKNOWN
    if inventor.country in known:
        return InventorControl.DOMESTIC_ASSIGNEE
    return InventorControl.FOREIGN_ASSIGNEE


def control_summary(records: Iterable[PatentRecord], country: str) -> ControlSummary:
    """Aggregate scope and control counts for one country.

    Patent rows count patents with at least one inventor in the country;
    inventor rows count that country's inventor listings, one per listing
    per patent.
    """
    patents_international = patents_domestic = 0
    inv_foreign = inv_domestic = inv_unknown = 0
    for record in records:
        scope = classify_patent_scope(record, country)
        if scope is PatentScope.NO_INVENTOR_IN_COUNTRY:
            continue
        if scope is PatentScope.EXCLUSIVELY_DOMESTIC:
            patents_domestic += 1
        else:
            patents_international += 1
        for inventor in record.inventors:
            if inventor.country != country:
                continue
            control = classify_inventor_control(record, inventor)
            if control is InventorControl.FOREIGN_ASSIGNEE:
                inv_foreign += 1
            elif control is InventorControl.DOMESTIC_ASSIGNEE:
                inv_domestic += 1
            else:
                inv_unknown += 1
    return ControlSummary(
        country=country,
        patents_international=patents_international,
        patents_domestic=patents_domestic,
        inventors_foreign=inv_foreign,
        inventors_domestic=inv_domestic,
        inventors_unknown=inv_unknown,
    )


def foreign_ownership_share(records: Iterable[PatentRecord], country: str, year: int) -> float:
    """Share of the year's country-linked patents with a foreign assignee.

    Numerator: patents granted that year with >= 1 inventor in the
    country and >= 1 assignee whose known country differs. Assignees with
    unknown country never count as foreign. Zero when the year has no
    qualifying patents.
    """
    denominator = numerator = 0
    for record in records:
        if record.grant_date.year != year:
            continue
        if not any(a.country == country for a in record.inventors):
            continue
        denominator += 1
        if any(a.country and a.country != country for a in record.assignees):
            numerator += 1
    return numerator / denominator if denominator else 0.0


def moving_average_3(raw: Mapping[int, float]) -> dict[int, float]:
    """Centered 3-year moving average; endpoints and gaps average the
    years actually present among {t-1, t, t+1}."""
    smoothed: dict[int, float] = {}
    for year in sorted(raw):
        window = [raw[y] for y in (year - 1, year, year + 1) if y in raw]
        smoothed[year] = sum(window) / len(window)
    return smoothed


def ownership_series(records: Sequence[PatentRecord], country: str) -> OwnershipSeries:
    """Raw and smoothed foreign-ownership shares over the corpus years."""
    years = sorted({r.grant_date.year for r in records})
    raw = {year: foreign_ownership_share(records, country, year) for year in years}
    return OwnershipSeries(country=country, raw=raw, smoothed=moving_average_3(raw))


def five_year_averages(
    year_counts: Mapping[int, float], windows: Sequence[tuple[int, int]]
) -> dict[tuple[int, int], float]:
    """Average yearly output per inclusive window.

    Years absent from the counts contribute zero but still divide; a
    window entirely outside the data range yields 0 with a warning.
    """
    out: dict[tuple[int, int], float] = {}
    for start, end in windows:
        if start > end:
            raise ValueError(f"window {start}-{end} is reversed")
        years = range(start, end + 1)
        if year_counts and not any(y in year_counts for y in years):
            logger.warning("window %d-%d lies outside the data range", start, end)
        total = sum(year_counts.get(y, 0.0) for y in years)
        out[(start, end)] = total / len(years)
    return out


def write_control_csv(summaries: Sequence[ControlSummary], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "country", "patents_international", "patents_domestic",
                "inventors_foreign", "inventors_domestic", "inventors_unknown",
            ]
        )
        for s in summaries:
            writer.writerow(
                [
                    s.country, s.patents_international, s.patents_domestic,
                    s.inventors_foreign, s.inventors_domestic, s.inventors_unknown,
                ]
            )


def write_ownership_csv(series_list: Sequence[OwnershipSeries], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["country", "year", "share_raw", "share_ma3"])
        for series in series_list:
            for year in sorted(series.raw):
                writer.writerow(
                    [
                        series.country,
                        year,
                        f"{series.raw[year]:.6f}",
                        f"{series.smoothed[year]:.6f}",
                    ]
                )


def write_window_csv(
    per_country: Mapping[str, Mapping[tuple[int, int], float]], path
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["country", "window", "avg_per_year"])
        for country in sorted(per_country):
            for (start, end), value in sorted(per_country[country].items()):
                writer.writerow([country, f"{start}-{end}", f"{value:.4f}"])
