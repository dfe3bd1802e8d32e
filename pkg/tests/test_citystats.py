"""City aggregation, the citation z-test, and percentile rank classes."""

from __future__ import annotations

import math
import random
from datetime import date

import pytest

from patlas.citystats import (
    RankClass,
    SignificanceClass,
    aggregate_by_city,
    classify_significance,
    country_year_counts,
    percentile_quantile,
    rank_class,
    score_cities,
    top_cited_set,
    ztest_city,
)
from patlas.gazetteer import Geocoder
from patlas.records import PartyAddress, PatentRecord, Query, filter_records

from conftest import make_random_corpus


def record(pid, cities, cited=0, year=2007):
    return PatentRecord(
        id=str(pid),
        grant_date=date(year, 6, 5),
        inventors=tuple(PartyAddress(city=c, country=cc) for c, cc in cities),
        cited_by_count=cited,
    )


def hungary_scored(corpus, gazetteer, min_patents=2):
    query = Query(frozenset({"HU"}), date(2007, 1, 1), date(2007, 12, 31))
    selected = filter_records(corpus, query)
    top = top_cited_set(selected, 0.10)
    aggregates = aggregate_by_city(selected, Geocoder(gazetteer), top)
    return score_cities(aggregates, len(selected), len(top), min_patents)


# -- highly cited set ---------------------------------------------------------


def brute_force_top_cited(records, fraction):
    """Independent oracle: try every threshold, keep the closest count."""
    n = len(records)
    if n == 0:
        return frozenset()
    target = fraction * n
    best = (abs(0 - target), 0, frozenset())  # empty cut
    max_cited = max(r.cited_by_count for r in records)
    for c in range(max_cited + 1, 0, -1):
        kept = frozenset(r.id for r in records if r.cited_by_count >= c)
        gap = abs(len(kept) - target)
        if gap < best[0] or (gap == best[0] and len(kept) > best[1]):
            best = (gap, len(kept), kept)
    return best[2]


def test_top_cited_all_uncited_is_empty():
    corpus = [record(i, [("Budapest", "HU")], cited=0) for i in range(10)]
    assert top_cited_set(corpus, 0.10) == frozenset()


def test_top_cited_descending_citations():
    corpus = [record(i, [("Budapest", "HU")], cited=9 - i) for i in range(10)]
    assert top_cited_set(corpus, 0.10) == {"0"}


def test_top_cited_matches_brute_force():
    rng = random.Random(17)
    for trial in range(200):
        n = rng.randint(1, 60)
        corpus = [
            record(i, [("Budapest", "HU")], cited=rng.choice([0, 0, 0, 1, 1, 2, 3, 5, 9]))
            for i in range(n)
        ]
        fraction = rng.choice([0.05, 0.1, 0.2, 0.5])
        assert top_cited_set(corpus, fraction) == brute_force_top_cited(corpus, fraction), (
            trial, n, fraction,
        )


def test_top_cited_rejects_bad_fraction():
    with pytest.raises(ValueError):
        top_cited_set([], 0.0)
    with pytest.raises(ValueError):
        top_cited_set([], 1.0)


# -- two-proportion z-test ----------------------------------------------------


def test_ztest_equal_proportions_is_zero():
    # city 10/100 vs rest 90/900: both 0.1, expected 100*0.1 = 10 > 5
    assert ztest_city(10, 100, 100, 1000) == pytest.approx(0.0)


def test_ztest_small_expectation_not_tested():
    # E = 40 * 20/200 = 4 <= 5
    assert ztest_city(8, 40, 20, 200) is None


def test_ztest_frozen_value():
    # p1 = 10/60, p2 = 20/240, pooled = 0.1
    # se = sqrt(0.1*0.9*(1/60+1/240)), z = (1/6 - 1/12)/se
    assert ztest_city(10, 60, 30, 300) == pytest.approx(1.9245008972987523, abs=1e-12)


def test_ztest_matches_statsmodels():
    from statsmodels.stats.proportion import proportions_ztest

    rng = random.Random(99)
    checked = 0
    for _ in range(2000):
        n_total = rng.randint(2, 500)
        x_total = rng.randint(0, n_total)
        n1 = rng.randint(1, n_total - 1)
        max_x1 = min(n1, x_total)
        min_x1 = max(0, x_total - (n_total - n1))
        x1 = rng.randint(min_x1, max_x1)
        z = ztest_city(x1, n1, x_total, n_total)
        expected_count = n1 * x_total / n_total
        if expected_count <= 5 or n_total - n1 == 0:
            assert z is None
            continue
        stat, _ = proportions_ztest(
            [x1, x_total - x1], [n1, n_total - n1], alternative="two-sided"
        )
        if math.isnan(stat):
            assert z == 0.0
        else:
            assert z == pytest.approx(stat, abs=1e-9)
        checked += 1
    assert checked > 300


def test_ztest_swapping_city_and_rest_negates_z():
    z1 = ztest_city(30, 120, 90, 480)
    z2 = ztest_city(60, 360, 90, 480)
    assert z1 is not None and z2 is not None
    assert z1 == pytest.approx(-z2)


def test_ztest_scaling_weakly_increases_magnitude():
    base = ztest_city(12, 80, 40, 400)
    assert base is not None
    for k in (2, 3, 10):
        scaled = ztest_city(12 * k, 80 * k, 40 * k, 400 * k)
        assert scaled is not None
        assert abs(scaled) >= abs(base) - 1e-12


def test_ztest_rejects_inconsistent_counts():
    with pytest.raises(ValueError):
        ztest_city(5, 4, 10, 100)
    with pytest.raises(ValueError):
        ztest_city(10, 20, 5, 100)  # city has more successes than the corpus


# -- significance classes -----------------------------------------------------


def test_classify_zero_z_is_above():
    assert classify_significance(0.0, 10.0, 0.0) is SignificanceClass.ABOVE


def test_classify_star_levels():
    assert classify_significance(2.10, 12.0, 1.0) is SignificanceClass.SIG_ABOVE_1
    assert classify_significance(-2.60, 12.0, -1.0) is SignificanceClass.SIG_BELOW_2
    assert classify_significance(3.30, 12.0, 1.0) is SignificanceClass.SIG_ABOVE_3
    assert classify_significance(1.90, 12.0, 1.0) is SignificanceClass.ABOVE
    assert classify_significance(-1.0, 12.0, -1.0) is SignificanceClass.BELOW


def test_classify_small_expectation_by_direction():
    assert classify_significance(None, 3.0, 1.0) is SignificanceClass.ABOVE_SMALL_E
    assert classify_significance(None, 3.0, 0.0) is SignificanceClass.ABOVE_SMALL_E
    assert classify_significance(None, 3.0, -0.5) is SignificanceClass.BELOW_SMALL_E


def test_classify_critical_boundaries():
    assert classify_significance(1.959964, 10.0, 1.0) is SignificanceClass.SIG_ABOVE_1
    assert classify_significance(1.959963, 10.0, 1.0) is SignificanceClass.ABOVE
    assert classify_significance(-3.290527, 10.0, -1.0) is SignificanceClass.SIG_BELOW_3


def test_hungary_fixture_has_no_significant_city(corpus_2007, gazetteer):
    scored = hungary_scored(corpus_2007, gazetteer)
    assert scored, "no scored cities"
    for agg in scored:
        assert agg.significance in (
            SignificanceClass.ABOVE_SMALL_E, SignificanceClass.BELOW_SMALL_E,
        )
        assert agg.significance.stars == ""


# -- quantiles and rank classes ----------------------------------------------


def test_quantile_distinct_counts():
    assert percentile_quantile([1, 2, 3, 4]) == [0.0, 0.25, 0.5, 0.75]


def test_quantile_all_equal():
    assert percentile_quantile([7, 7, 7]) == [0.0, 0.0, 0.0]


def test_quantile_matches_brute_force_with_ties():
    rng = random.Random(31)
    for _ in range(300):
        counts = [rng.choice([1, 1, 2, 2, 2, 3, 5, 5, 8]) for _ in range(rng.randint(1, 40))]
        got = percentile_quantile(counts)
        want = [
            sum(1 for other in counts if other < c) / len(counts) for c in counts
        ]
        assert got == want


def test_rank_class_thresholds():
    assert rank_class(0.995) is RankClass.TOP1
    assert rank_class(0.96) is RankClass.TOP5
    assert rank_class(12 / 13) is RankClass.TOP10
    assert rank_class(11 / 13) is RankClass.TOP25
    assert rank_class(10 / 13) is RankClass.TOP25
    assert rank_class(0.6) is RankClass.TOP50
    assert rank_class(0.0) is RankClass.BOTTOM50


def test_hungary_rank_classes(corpus_2007, gazetteer):
    scored = {a.name: a for a in hungary_scored(corpus_2007, gazetteer)}
    assert len(scored) == 13
    assert scored["Budapest"].quantile == pytest.approx(12 / 13)
    assert scored["Budapest"].rank_class is RankClass.TOP10
    assert scored["Szeged"].quantile == pytest.approx(11 / 13)
    assert scored["Szeged"].rank_class is RankClass.TOP25
    assert scored["Debrecen"].quantile == pytest.approx(10 / 13)
    assert scored["Debrecen"].rank_class is RankClass.TOP25


# -- aggregation --------------------------------------------------------------


def test_two_inventors_same_city_count_once(gazetteer):
    corpus = [record(1, [("Vac", "HU"), ("Vac", "HU")])]
    aggs = aggregate_by_city(corpus, Geocoder(gazetteer))
    assert len(aggs) == 1
    assert aggs[0].patent_count == 1


def test_multi_city_patent_counts_in_each_city(gazetteer):
    corpus = [record(1, [("Brno", "CZ"), ("Prague", "CZ")])]
    aggs = {a.key: a for a in aggregate_by_city(corpus, Geocoder(gazetteer))}
    assert aggs[("CZ", "brno")].patent_count == 1
    assert aggs[("CZ", "praha")].patent_count == 1


def test_hungary_city_counts(corpus_2007, gazetteer):
    query = Query(frozenset({"HU"}), date(2007, 1, 1), date(2007, 12, 31))
    selected = filter_records(corpus_2007, query)
    aggs = {a.name: a for a in aggregate_by_city(selected, Geocoder(gazetteer))}
    assert aggs["Budapest"].patent_count == 37
    assert aggs["Szeged"].patent_count == 7
    assert aggs["Debrecen"].patent_count == 6


def test_city_counts_sum_to_at_least_patent_count(corpus_2007, gazetteer):
    aggs = aggregate_by_city(corpus_2007, Geocoder(gazetteer))
    assert sum(a.patent_count for a in aggs) >= len(corpus_2007)


def test_transcription_variants_share_one_aggregate(gazetteer):
    corpus = [record(1, [("Warsaw", "PL")]), record(2, [("Warszawa", "PL")])]
    aggs = aggregate_by_city(corpus, Geocoder(gazetteer))
    assert len(aggs) == 1
    assert aggs[0].patent_count == 2
    assert aggs[0].key == ("PL", "warszawa")


def test_unmatched_city_aggregates_without_geo(gazetteer):
    corpus = [record(1, [("Atlantis", "HU")]), record(2, [("Atlantis", "HU")])]
    aggs = aggregate_by_city(corpus, Geocoder(gazetteer))
    assert len(aggs) == 1
    assert aggs[0].geo is None
    assert aggs[0].patent_count == 2
    scored = score_cities(aggs, 2, 0, min_patents=2)
    assert len(scored) == 1  # still in the table, just never on a map


def test_every_scored_city_has_one_class_each(corpus_2007, gazetteer):
    scored = hungary_scored(corpus_2007, gazetteer)
    for agg in scored:
        assert isinstance(agg.significance, SignificanceClass)
        assert isinstance(agg.rank_class, RankClass)
        assert agg.quantile is not None and 0.0 <= agg.quantile < 1.0


# -- per-year country counts --------------------------------------------------


def test_fractional_counting_shares():
    corpus = [record(1, [("Budapest", "HU"), ("Budapest", "HU"), ("Munich", "DE")])]
    assert country_year_counts(corpus, "HU", "fractional") == {2007: pytest.approx(2 / 3)}
    assert country_year_counts(corpus, "DE", "fractional") == {2007: pytest.approx(1 / 3)}


def test_whole_counting_counts_each_country_once():
    corpus = [record(1, [("Budapest", "HU"), ("Munich", "DE")])]
    assert country_year_counts(corpus, "HU", "whole") == {2007: 1.0}
    assert country_year_counts(corpus, "DE", "whole") == {2007: 1.0}


def test_year_counts_match_brute_force():
    corpus = make_random_corpus(400, seed=77)
    for mode in ("whole", "fractional"):
        got = country_year_counts(corpus, "DE", mode)
        want: dict[int, float] = {}
        for r in corpus:
            k = sum(1 for a in r.inventors if a.country == "DE")
            if k == 0:
                continue
            add = 1.0 if mode == "whole" else k / len(r.inventors)
            want[r.grant_date.year] = want.get(r.grant_date.year, 0.0) + add
        assert got.keys() == want.keys()
        for year in want:
            assert got[year] == pytest.approx(want[year])


def test_year_counts_rejects_unknown_mode():
    with pytest.raises(ValueError):
        country_year_counts([], "HU", "mixed")
