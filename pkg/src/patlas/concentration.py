"""Group-level spatial concentration: rank-size series, patenting
intensity, log-log slope fitting, and hub detection.

A group is a named territory (a set of countries, optionally narrowed to
admin1 regions) whose locations come from the gazetteer; patent counts
join in from the city aggregates, zero when a location never patented.
Patenting intensity compares a location's share of the group's patents
with its share of the group's population, so the population-weighted
mean of intensity over the whole group is exactly 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .citystats import CityAggregate, CityKey
from .gazetteer import Gazetteer

__all__ = [
    "GroupLocation",
    "GroupProfile",
    "GroupSelector",
    "IntensityPoint",
    "build_group",
    "detect_hubs",
    "intensity_rank_series",
    "loglog_slope",
    "patenting_intensity",
    "rank_size_series",
    "write_intensity_csv",
    "write_rank_size_csv",
]


@dataclass(frozen=True)
class GroupSelector:
    """Country filter for a group.

    Per country, either all admin1 regions (None), an explicit include
    set, or an exclude set (complement=True) for splits like
    "everything except the listed states".
    """

    countries: Mapping[str, tuple[frozenset[str] | None, bool]]

    @classmethod
    def parse(cls, text: str) -> "GroupSelector":
        """Parse "CZ,HU,PL,SK" or "DE:BB|MV|SN" or "DE:!BB|MV|SN"."""
        table: dict[str, tuple[frozenset[str] | None, bool]] = {}
        for term in text.split(","):
            term = term.strip()
            if not term:
                continue
            country, _, regions = term.partition(":")
            country = country.strip().upper()
            if not regions:
                table[country] = (None, False)
                continue
            regions = regions.strip()
            complement = regions.startswith("!")
            if complement:
                regions = regions[1:]
            codes = frozenset(r.strip() for r in regions.split("|") if r.strip())
            table[country] = (codes, complement)
        if not table:
            raise ValueError(f"empty group selector: {text!r}")
        return cls(countries=dict(table))

    def admits(self, country: str, admin1: str | None) -> bool:
        rule = self.countries.get(country)
        if rule is None:
            return False
        codes, complement = rule
        if codes is None:
            return True
        inside = admin1 in codes
        return not inside if complement else inside


@dataclass(frozen=True)
class GroupLocation:
    key: CityKey
    name: str
    patents: float
    population: int


@dataclass(frozen=True)
class GroupProfile:
    group_id: str
    locations: tuple[GroupLocation, ...]

    def total_patents(self) -> float:
        return sum(loc.patents for loc in self.locations)

    def total_population(self) -> int:
        return sum(loc.population for loc in self.locations)


@dataclass(frozen=True)
class IntensityPoint:
    """Per-location intensity: share of group patents over share of group
    population, with the location's rank by descending population."""

    key: CityKey
    name: str
    patents: float
    population: int
    intensity: float
    population_rank: int

    @property
    def log_rank(self) -> float:
        return math.log(self.population_rank)

    @property
    def log_intensity(self) -> float:
        return math.log(self.intensity)


def build_group(
    aggregates: Iterable[CityAggregate],
    gazetteer: Gazetteer,
    selector: GroupSelector,
    group_id: str,
) -> GroupProfile:
    """Assemble a group from every gazetteer city the selector admits.

    Patent counts come from the aggregates (0 when absent). Gazetteer
    rows sharing a key collapse to the most populous one, mirroring the
    geocoding tie rule.
    """
    counts: dict[CityKey, float] = {a.key: float(a.patent_count) for a in aggregates}
    chosen: dict[CityKey, GroupLocation] = {}
    for entry in gazetteer.entries:
        if not selector.admits(entry.country, entry.admin1):
            continue
        key = (entry.country, entry.ascii_name)
        loc = GroupLocation(
            key=key,
            name=entry.name,
            patents=counts.get(key, 0.0),
            population=entry.population,
        )
        old = chosen.get(key)
        if old is None or entry.population > old.population:
            chosen[key] = loc
    if not chosen:
        raise ValueError(f"group {group_id!r}: selector matches no gazetteer city")
    locations = tuple(chosen[key] for key in sorted(chosen))
    return GroupProfile(group_id=group_id, locations=locations)


def rank_size_series(profile: GroupProfile) -> list[tuple[int, float]]:
    """(rank, patents) sorted by patents descending, zero locations dropped.

    Ties order by key so the series is deterministic.
    """
    nonzero = [loc for loc in profile.locations if loc.patents > 0]
    if not nonzero:
        raise ValueError(f"group {profile.group_id!r}: no patenting locations")
    nonzero.sort(key=lambda loc: (-loc.patents, loc.key))
    return [(rank, loc.patents) for rank, loc in enumerate(nonzero, start=1)]


def patenting_intensity(profile: GroupProfile) -> list[IntensityPoint]:
    """Intensity per patenting location.

    Both normalizing sums run over the whole group (zero-patent
    locations included); only locations holding at least one patent are
    emitted. Population rank is computed over the emitted points,
    descending population, key as tiebreak.
    """
    total_patents = profile.total_patents()
    total_population = profile.total_population()
    if total_patents <= 0:
        raise ValueError(f"group {profile.group_id!r}: no patenting locations")
    included = [loc for loc in profile.locations if loc.patents >= 1]
    for loc in included:
        if loc.population <= 0:
            raise ValueError(
                f"group {profile.group_id!r}: location {loc.name!r} has no population"
            )
    included.sort(key=lambda loc: (-loc.population, loc.key))
    points = []
    for rank, loc in enumerate(included, start=1):
        intensity = (loc.patents / total_patents) / (loc.population / total_population)
        points.append(
            IntensityPoint(
                key=loc.key,
                name=loc.name,
                patents=loc.patents,
                population=loc.population,
                intensity=intensity,
                population_rank=rank,
            )
        )
    return points


def intensity_rank_series(profile: GroupProfile) -> list[tuple[float, float]]:
    """(ln population rank, ln intensity) pairs; the y = 0 line is the
    even-distribution reference."""
    return [(p.log_rank, p.log_intensity) for p in patenting_intensity(profile)]


def loglog_slope(series: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Ordinary least squares over (x, y) pairs: (slope, intercept, r2)."""
    if len(series) < 2:
        raise ValueError("need at least two points")
    n = len(series)
    mean_x = sum(x for x, _ in series) / n
    mean_y = sum(y for _, y in series) / n
    sxx = sum((x - mean_x) ** 2 for x, _ in series)
    if sxx == 0.0:
        raise ValueError("all x values equal")
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in series)
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    ss_res = sum((y - (intercept + slope * x)) ** 2 for x, y in series)
    ss_tot = sum((y - mean_y) ** 2 for _, y in series)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def detect_hubs(profile: GroupProfile, top_k_by_population: int = 10) -> list[IntensityPoint]:
    """Populous locations beating the even-distribution expectation.

    Among the top_k most populous patenting locations, keep those with
    intensity strictly above 1, sorted by intensity descending.
    """
    if top_k_by_population < 1:
        raise ValueError("top_k_by_population must be >= 1")
    points = patenting_intensity(profile)
    head = [p for p in points if p.population_rank <= top_k_by_population]
    hubs = [p for p in head if p.intensity > 1.0]
    hubs.sort(key=lambda p: (-p.intensity, p.key))
    return hubs


def write_rank_size_csv(series: Sequence[tuple[int, float]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "patents", "ln_rank", "ln_patents"])
        for rank, patents in series:
            writer.writerow(
                [rank, f"{patents:g}", f"{math.log(rank):.6f}", f"{math.log(patents):.6f}"]
            )


def write_intensity_csv(points: Sequence[IntensityPoint], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["key", "population", "patents", "PI", "pop_rank", "ln_pop_rank", "ln_PI"]
        )
        for p in points:
            writer.writerow(
                [
                    f"{p.key[0]}/{p.key[1]}",
                    p.population,
                    f"{p.patents:g}",
                    f"{p.intensity:.6f}",
                    p.population_rank,
                    f"{p.log_rank:.6f}",
                    f"{p.log_intensity:.6f}",
                ]
            )
