"""Group profiles, patenting intensity, rank-size series, hub detection."""

from __future__ import annotations

import math
import random

import pytest

from patlas.citystats import aggregate_by_city
from patlas.concentration import (
    GroupLocation,
    GroupProfile,
    GroupSelector,
    build_group,
    detect_hubs,
    intensity_rank_series,
    loglog_slope,
    patenting_intensity,
    rank_size_series,
)
from patlas.gazetteer import Geocoder

def profile(rows, group_id="g"):
    locations = tuple(
        GroupLocation(key=("XX", f"loc{i}"), name=f"loc{i}", patents=pat, population=pop)
        for i, (pat, pop) in enumerate(rows)
    )
    return GroupProfile(group_id=group_id, locations=locations)


def random_profile(rng, max_locations=40):
    rows = []
    for _ in range(rng.randint(1, max_locations)):
        rows.append((rng.choice([0, 0, 1, 2, 3, 10, 50]), rng.randint(1, 5_000_000)))
    if not any(p for p, _ in rows):
        rows[0] = (1, rows[0][1])
    return profile(rows)


# -- selectors and group building ----------------------------------------------


def test_selector_parsing():
    cee = GroupSelector.parse("CZ,HU,PL,SK")
    assert cee.admits("CZ", None) and cee.admits("HU", "PE")
    assert not cee.admits("DE", None)

    east = GroupSelector.parse("DE:BB|MV|SN|ST|TH|BE")
    assert east.admits("DE", "SN") and east.admits("DE", "BE")
    assert not east.admits("DE", "BY") and not east.admits("DE", None)

    west = GroupSelector.parse("DE:!BB|MV|SN|ST|TH|BE")
    assert west.admits("DE", "BY") and west.admits("DE", "NW")
    assert not west.admits("DE", "SN")

    with pytest.raises(ValueError):
        GroupSelector.parse("  ,  ")


def test_build_group_joins_counts(corpus_2007, gazetteer):
    aggs = aggregate_by_city(corpus_2007, Geocoder(gazetteer))
    cee = build_group(aggs, gazetteer, GroupSelector.parse("CZ,HU,PL,SK"), "CEE")
    by_key = {loc.key: loc for loc in cee.locations}
    assert by_key[("HU", "budapest")].patents == 37
    assert by_key[("CZ", "praha")].patents == 17
    assert by_key[("PL", "warszawa")].patents == 21
    assert all(loc.key[0] in {"CZ", "HU", "PL", "SK"} for loc in cee.locations)


def test_build_group_zero_fills_missing_cities(gazetteer):
    cee = build_group([], gazetteer, GroupSelector.parse("CZ,HU,PL,SK"), "CEE")
    assert cee.locations and all(loc.patents == 0 for loc in cee.locations)


def test_build_group_unknown_selector_errors(gazetteer):
    with pytest.raises(ValueError, match="matches no gazetteer city"):
        build_group([], gazetteer, GroupSelector.parse("XX"), "nowhere")


def test_east_west_split_covers_germany(gazetteer):
    east = build_group([], gazetteer, GroupSelector.parse("DE:BB|MV|SN|ST|TH|BE"), "east")
    west = build_group([], gazetteer, GroupSelector.parse("DE:!BB|MV|SN|ST|TH|BE"), "west")
    east_keys = {loc.key for loc in east.locations}
    west_keys = {loc.key for loc in west.locations}
    assert not east_keys & west_keys
    all_de = {e.ascii_name for e in gazetteer.entries if e.country == "DE"}
    assert {k[1] for k in east_keys} | {k[1] for k in west_keys} == all_de


# -- rank-size ------------------------------------------------------------------


def test_rank_size_simple():
    series = rank_size_series(profile([(10, 1), (5, 1), (2, 1)]))
    assert series == [(1, 10.0), (2, 5.0), (3, 2.0)]


def test_rank_size_zipf_counts_monotone():
    rows = [(100 // r, 1000) for r in range(1, 51)]
    series = rank_size_series(profile(rows))
    sizes = [s for _, s in series]
    assert sizes == sorted(sizes, reverse=True)
    assert [r for r, _ in series] == list(range(1, len(series) + 1))


def test_rank_size_drops_zero_locations_and_matches_sort_oracle():
    rng = random.Random(8)
    for _ in range(100):
        prof = random_profile(rng)
        series = rank_size_series(prof)
        expected = sorted(
            (loc.patents for loc in prof.locations if loc.patents > 0), reverse=True
        )
        assert [s for _, s in series] == expected


def test_rank_size_all_zero_errors():
    with pytest.raises(ValueError, match="no patenting locations"):
        rank_size_series(profile([(0, 10), (0, 20)]))


# -- patenting intensity ---------------------------------------------------------


def test_intensity_even_distribution_is_one():
    # identical patents-per-inhabitant everywhere
    prof = profile([(2, 1000), (4, 2000), (8, 4000)])
    for point in patenting_intensity(prof):
        assert point.intensity == pytest.approx(1.0)


def test_intensity_two_locations_hand_computed():
    prof = profile([(2, 100), (2, 300)])
    points = {p.key[1]: p for p in patenting_intensity(prof)}
    assert points["loc0"].intensity == pytest.approx(2.0)
    assert points["loc1"].intensity == pytest.approx(2 / 3, abs=1e-4)


def test_intensity_sums_include_zero_patent_locations():
    # the zero-patent location contributes population to the denominator
    prof = profile([(2, 100), (0, 100)])
    (point,) = patenting_intensity(prof)
    assert point.intensity == pytest.approx((2 / 2) / (100 / 200))


def test_intensity_zero_population_errors():
    prof = profile([(2, 0), (1, 100)])
    with pytest.raises(ValueError, match="loc0"):
        patenting_intensity(prof)


def test_population_weighted_mean_intensity_is_one():
    rng = random.Random(4)
    for _ in range(200):
        prof = random_profile(rng)
        points = patenting_intensity(prof)
        total_pop = prof.total_population()
        mean = sum(p.intensity * p.population / total_pop for p in points)
        # zero-patent locations hold intensity 0, so the emitted points
        # carry the whole weighted mass
        assert mean == pytest.approx(1.0, abs=1e-12)


def test_intensity_scale_invariance():
    rng = random.Random(12)
    prof = random_profile(rng)
    base = {p.key: p.intensity for p in patenting_intensity(prof)}
    scaled_rows = tuple(
        GroupLocation(key=loc.key, name=loc.name, patents=loc.patents * 7,
                      population=loc.population * 3)
        for loc in prof.locations
    )
    scaled = GroupProfile(group_id="g", locations=scaled_rows)
    for p in patenting_intensity(scaled):
        assert p.intensity == pytest.approx(base[p.key], rel=1e-12)


def test_population_rank_descends_by_population():
    prof = profile([(1, 100), (2, 9000), (3, 400)])
    points = patenting_intensity(prof)
    assert [p.key[1] for p in points] == ["loc1", "loc2", "loc0"]
    assert [p.population_rank for p in points] == [1, 2, 3]


def test_intensity_series_reference_line():
    prof = profile([(2, 1000), (4, 2000), (8, 4000)])
    series = intensity_rank_series(prof)
    assert series[0][0] == pytest.approx(0.0)  # ln rank 1
    for _, y in series:
        assert y == pytest.approx(0.0)  # even distribution sits on the line


# -- log-log regression ----------------------------------------------------------


def test_loglog_exact_power_law():
    series = [(math.log(r), math.log(100.0 / r)) for r in range(1, 51)]
    slope, intercept, r2 = loglog_slope(series)
    assert slope == pytest.approx(-1.0, abs=1e-9)
    assert intercept == pytest.approx(math.log(100.0), abs=1e-9)
    assert r2 >= 1.0 - 1e-9


def test_loglog_two_points_perfect_fit():
    slope, intercept, r2 = loglog_slope([(0.0, 1.0), (1.0, 3.0)])
    assert slope == pytest.approx(2.0)
    assert intercept == pytest.approx(1.0)
    assert r2 == pytest.approx(1.0)


def test_loglog_recovers_exact_linear_data():
    rng = random.Random(2)
    for _ in range(50):
        a, b = rng.uniform(-5, 5), rng.uniform(-3, 3)
        xs = sorted(rng.uniform(0, 10) for _ in range(20))
        series = [(x, a + b * x) for x in xs]
        slope, intercept, r2 = loglog_slope(series)
        assert slope == pytest.approx(b, abs=1e-9)
        assert intercept == pytest.approx(a, abs=1e-9)


def test_loglog_matches_scipy_on_noisy_data():
    from scipy.stats import linregress

    rng = random.Random(21)
    for _ in range(50):
        xs = [rng.uniform(0, 5) for _ in range(30)]
        ys = [2.0 - 1.3 * x + rng.gauss(0, 0.4) for x in xs]
        slope, intercept, r2 = loglog_slope(list(zip(xs, ys)))
        ref = linregress(xs, ys)
        assert slope == pytest.approx(ref.slope, abs=1e-9)
        assert intercept == pytest.approx(ref.intercept, abs=1e-9)
        assert r2 == pytest.approx(ref.rvalue**2, abs=1e-9)


def test_loglog_degenerate_inputs_error():
    with pytest.raises(ValueError):
        loglog_slope([(1.0, 2.0)])
    with pytest.raises(ValueError):
        loglog_slope([(1.0, 2.0), (1.0, 3.0)])


# -- hubs -------------------------------------------------------------------------


def test_cee_reconstruction_has_no_hubs(corpus_2007, gazetteer):
    aggs = aggregate_by_city(corpus_2007, Geocoder(gazetteer))
    cee = build_group(aggs, gazetteer, GroupSelector.parse("CZ,HU,PL,SK"), "CEE")
    assert detect_hubs(cee, 10) == []
    budapest = {p.key: p for p in patenting_intensity(cee)}[("HU", "budapest")]
    assert budapest.intensity == pytest.approx(1.0, abs=0.15)
    assert budapest.intensity <= 1.0


def test_east_germany_has_hubs(corpus_2007, gazetteer):
    aggs = aggregate_by_city(corpus_2007, Geocoder(gazetteer))
    east = build_group(aggs, gazetteer, GroupSelector.parse("DE:BB|MV|SN|ST|TH|BE"), "east")
    hubs = detect_hubs(east, 10)
    names = [h.name for h in hubs]
    assert "Jena" in names and "Dresden" in names
    for hub in hubs:
        assert hub.intensity > 1.0
        assert hub.population_rank <= 10


def test_largest_city_with_high_intensity_is_a_hub():
    prof = profile([(30, 10_000), (1, 5_000), (1, 1_000)])
    hubs = detect_hubs(prof, 10)
    assert hubs and hubs[0].key[1] == "loc0"


def test_no_hub_when_all_below_parity_in_top_k():
    # big cities under-patent; the tiny one over-patents but is not top-k
    prof = profile([(1, 1_000_000), (1, 900_000), (5, 10)])
    assert detect_hubs(prof, 2) == []


def test_hub_needs_positive_k():
    with pytest.raises(ValueError):
        detect_hubs(profile([(1, 10)]), 0)
