"""City-level portfolio statistics for the two map styles.

A patent contributes once to each distinct inventor city (whole counting
per city). On top of the per-city counts this module computes

* citation performance: each city's share of highly cited patents tested
  against the rest of the corpus with a two-proportion z-test, gated on
  the expected count exceeding five;
* portfolio rank: the strictly-fewer quantile of the city's patent count
  and its percentile rank class.

Aggregation is an associative, commutative merge of per-city partials;
the statistics run single-pass over the final aggregate.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_left
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

from .gazetteer import Geocoder, GeoLocation, normalize_name
from .records import PatentRecord

__all__ = [
    "CityAggregate",
    "RankClass",
    "SignificanceClass",
    "aggregate_by_city",
    "classify_significance",
    "country_year_counts",
    "percentile_quantile",
    "rank_class",
    "score_cities",
    "top_cited_set",
    "write_city_table",
    "ztest_city",
]

# Two-sided standard-normal critical values for p < 0.05 / 0.01 / 0.001.
Z_CRITICAL = (1.959964, 2.575829, 3.290527)

# Expected-count reliability gate: no test at or below this value.
EXPECTED_MIN = 5.0


class SignificanceClass(Enum):
    """Citation-performance class; value = (label, stars, hex color)."""

    SIG_ABOVE_3 = ("sig_above_3", "***", "006400")
    SIG_ABOVE_2 = ("sig_above_2", "**", "006400")
    SIG_ABOVE_1 = ("sig_above_1", "*", "006400")
    ABOVE = ("above", "", "90EE90")
    ABOVE_SMALL_E = ("above_small_e", "", "32CD32")
    SIG_BELOW_3 = ("sig_below_3", "***", "8B0000")
    SIG_BELOW_2 = ("sig_below_2", "**", "8B0000")
    SIG_BELOW_1 = ("sig_below_1", "*", "8B0000")
    BELOW = ("below", "", "FFA500")
    BELOW_SMALL_E = ("below_small_e", "", "FF4500")

    @property
    def label(self) -> str:
        return self.value[0]

    @property
    def stars(self) -> str:
        return self.value[1]

    @property
    def color(self) -> str:
        return self.value[2]


class RankClass(Enum):
    """Percentile rank class; value = (label, hex color)."""

    TOP1 = ("top1", "FF0000")
    TOP5 = ("top5", "FF00FF")
    TOP10 = ("top10", "FFC0CB")
    TOP25 = ("top25", "FFA500")
    TOP50 = ("top50", "00FFFF")
    BOTTOM50 = ("bottom50", "0000FF")

    @property
    def label(self) -> str:
        return self.value[0]

    @property
    def color(self) -> str:
        return self.value[1]


CityKey = tuple[str, str]  # (country, normalized city name)


@dataclass(frozen=True)
class CityAggregate:
    """Per-city portfolio with citation-test and rank results.

    Statistical fields are None until score_cities() fills them for the
    cities passing the map threshold.
    """

    key: CityKey
    name: str
    geo: GeoLocation | None
    patent_count: int
    top_cited_count: int
    expected: float | None = None
    z_score: float | None = None
    significance: SignificanceClass | None = None
    quantile: float | None = None
    rank_class: RankClass | None = None


def top_cited_set(records: Sequence[PatentRecord], fraction: float = 0.10) -> frozenset[str]:
    """Ids of the most-cited patents, targeting `fraction` of the corpus.

    The citation threshold keeps whole tie groups, so the chosen cut is
    the one whose kept-count lies closest to fraction*N; exact ties
    resolve toward keeping more patents. When even the strictest positive
    threshold overshoots (for example every patent uncited), the set is
    empty.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    n = len(records)
    if n == 0:
        return frozenset()
    target = fraction * n

    by_citations = sorted(records, key=lambda r: -r.cited_by_count)
    # Candidate cuts: after each complete tie group, plus the empty cut.
    best_count = 0
    best_gap = target  # gap of the empty cut
    prefix = 0
    i = 0
    while i < n:
        value = by_citations[i].cited_by_count
        j = i
        while j < n and by_citations[j].cited_by_count == value:
            j += 1
        prefix = j
        if value > 0:  # a zero threshold would sweep in the uncited tail
            gap = abs(prefix - target)
            if gap < best_gap or (gap == best_gap and prefix > best_count):
                best_gap = gap
                best_count = prefix
        i = j
    return frozenset(r.id for r in by_citations[:best_count])


def aggregate_by_city(
    records: Sequence[PatentRecord],
    geocoder: Geocoder,
    top_cited: frozenset[str] = frozenset(),
) -> list[CityAggregate]:
    """Whole-count patents per distinct inventor city.

    Every inventor listing goes through the geocoder, so unresolved
    addresses land in its unmatched report; cities that fail to geocode
    still aggregate (geo=None) and are only dropped at map time.

    Matched addresses key by the gazetteer-canonical name, so spelling
    variants of one city (original vs transcription) share an aggregate
    and later join group profiles by the same key.
    """
    names: dict[CityKey, str] = {}
    geos: dict[CityKey, GeoLocation | None] = {}
    patents: dict[CityKey, set[str]] = {}
    for record in records:
        keys_here: set[CityKey] = set()
        for addr in record.inventors:
            loc = geocoder.resolve(addr)
            canonical = loc.matched_name if loc is not None else addr.city
            key = (addr.country, normalize_name(canonical))
            if key not in names:
                names[key] = addr.city
                geos[key] = loc
            keys_here.add(key)
        for key in keys_here:
            patents.setdefault(key, set()).add(record.id)
    out = []
    for key in sorted(patents):
        ids = patents[key]
        out.append(
            CityAggregate(
                key=key,
                name=names[key],
                geo=geos[key],
                patent_count=len(ids),
                top_cited_count=len(ids & top_cited),
            )
        )
    return out


def ztest_city(x1: int, n1: int, x_total: int, n_total: int) -> float | None:
    """Two-proportion z statistic for a city against the rest of the corpus.

    The reference population is the whole corpus (x_total successes out of
    n_total), split into the city (x1 of n1) and everything else. Returns
    None (not tested) when the expected count n1 * x_total / n_total is at
    most five, or when the city is the entire corpus.
    """
    if not 0 <= x1 <= n1 <= n_total or not 0 <= x_total <= n_total:
        raise ValueError("inconsistent counts")
    x2 = x_total - x1
    n2 = n_total - n1
    if x2 < 0 or x2 > n2:
        raise ValueError("city successes exceed corpus successes")
    if n_total == 0 or n2 == 0:
        return None
    pooled = x_total / n_total
    expected = n1 * pooled
    if expected <= EXPECTED_MIN:
        return None
    variance = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)
    if variance == 0.0:
        # pooled is 0 or 1, so both proportions equal it exactly.
        return 0.0
    return (x1 / n1 - x2 / n2) / math.sqrt(variance)


def classify_significance(
    z: float | None, expected: float, direction: float
) -> SignificanceClass:
    """Map a z-test outcome to its color class.

    `direction` is the sign of the city share minus the corpus share; it
    decides above/below for untested cities (zero counts as above, the
    stated convention for a dead-even result).
    """
    if z is None or expected <= EXPECTED_MIN:
        return (
            SignificanceClass.ABOVE_SMALL_E
            if direction >= 0
            else SignificanceClass.BELOW_SMALL_E
        )
    above = z >= 0
    magnitude = abs(z)
    if magnitude >= Z_CRITICAL[2]:
        return SignificanceClass.SIG_ABOVE_3 if above else SignificanceClass.SIG_BELOW_3
    if magnitude >= Z_CRITICAL[1]:
        return SignificanceClass.SIG_ABOVE_2 if above else SignificanceClass.SIG_BELOW_2
    if magnitude >= Z_CRITICAL[0]:
        return SignificanceClass.SIG_ABOVE_1 if above else SignificanceClass.SIG_BELOW_1
    return SignificanceClass.ABOVE if above else SignificanceClass.BELOW


def percentile_quantile(counts: Sequence[float]) -> list[float]:
    """Strictly-fewer quantile for each count: q_i = #{j: c_j < c_i} / len.

    Ties share a quantile; results lie in [0, 1).
    """
    if not counts:
        raise ValueError("need at least one city")
    ordered = sorted(counts)
    n = len(counts)
    return [bisect_left(ordered, c) / n for c in counts]


def rank_class(q: float) -> RankClass:
    """Percentile rank class from a strictly-fewer quantile in [0, 1)."""
    if q >= 0.99:
        return RankClass.TOP1
    if q >= 0.95:
        return RankClass.TOP5
    if q >= 0.90:
        return RankClass.TOP10
    if q >= 0.75:
        return RankClass.TOP25
    if q >= 0.50:
        return RankClass.TOP50
    return RankClass.BOTTOM50


def score_cities(
    aggregates: Iterable[CityAggregate],
    corpus_size: int,
    corpus_top_cited: int,
    min_patents: int = 2,
) -> list[CityAggregate]:
    """Fill the statistical fields for cities with at least min_patents.

    The quantile denominator is the returned set itself (the map set);
    the z-test reference stays the whole corpus.
    """
    selected = sorted(
        (a for a in aggregates if a.patent_count >= min_patents), key=lambda a: a.key
    )
    if not selected:
        return []
    quantiles = percentile_quantile([a.patent_count for a in selected])
    scored = []
    for agg, q in zip(selected, quantiles):
        x1, n1 = agg.top_cited_count, agg.patent_count
        expected = n1 * corpus_top_cited / corpus_size if corpus_size else 0.0
        z = ztest_city(x1, n1, corpus_top_cited, corpus_size) if corpus_size else None
        direction = (x1 / n1 - corpus_top_cited / corpus_size) if corpus_size else 0.0
        scored.append(
            replace(
                agg,
                expected=expected,
                z_score=z,
                significance=classify_significance(z, expected, direction),
                quantile=q,
                rank_class=rank_class(q),
            )
        )
    return scored


def country_year_counts(
    records: Iterable[PatentRecord], country: str, counting_mode: str = "whole"
) -> dict[int, float]:
    """Patent output per grant year for one inventor country.

    whole: +1 per patent with at least one inventor there (integer
    counting). fractional: + inventors-there / inventors-total.
    """
    if counting_mode not in ("whole", "fractional"):
        raise ValueError(f"counting_mode must be whole or fractional, got {counting_mode!r}")
    totals: dict[int, float] = {}
    for record in records:
        in_country = sum(1 for a in record.inventors if a.country == country)
        if not in_country:
            continue
        share = 1.0 if counting_mode == "whole" else in_country / len(record.inventors)
        year = record.grant_date.year
        totals[year] = totals.get(year, 0.0) + share
    return dict(sorted(totals.items()))


def write_city_table(scored: Iterable[CityAggregate], path) -> None:
    """City statistics CSV; unmatched cities keep blank coordinates."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "city", "country", "lat", "lon", "patents", "top_cited",
                "expected", "z", "stars", "significance_class", "quantile",
                "rank_class",
            ]
        )
        for a in scored:
            writer.writerow(
                [
                    a.name,
                    a.key[0],
                    f"{a.geo.lat:.6f}" if a.geo else "",
                    f"{a.geo.lon:.6f}" if a.geo else "",
                    a.patent_count,
                    a.top_cited_count,
                    f"{a.expected:.4f}" if a.expected is not None else "",
                    f"{a.z_score:.4f}" if a.z_score is not None else "",
                    a.significance.stars if a.significance else "",
                    a.significance.label if a.significance else "",
                    f"{a.quantile:.6f}" if a.quantile is not None else "",
                    a.rank_class.label if a.rank_class else "",
                ]
            )
