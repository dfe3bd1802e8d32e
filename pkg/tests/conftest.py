"""Shared fixtures: shipped data files and synthetic corpus builders."""

from __future__ import annotations

import random
from datetime import date, timedelta
from pathlib import Path

import pytest

from patlas.gazetteer import Gazetteer, Geocoder
from patlas.records import Assignee, PartyAddress, PatentRecord, parse_record_stream

DATA_DIR = Path(__file__).resolve().parent / "data"

CITY_POOL = [
    ("Budapest", "HU"), ("Szeged", "HU"), ("Debrecen", "HU"), ("Miskolc", "HU"),
    ("Prague", "CZ"), ("Brno", "CZ"), ("Ostrava", "CZ"), ("Olomouc", "CZ"),
    ("Warsaw", "PL"), ("Krakow", "PL"), ("Wroclaw", "PL"), ("Poznan", "PL"),
    ("Bratislava", "SK"), ("Kosice", "SK"),
    ("Munich", "DE"), ("Berlin", "DE"), ("Hamburg", "DE"), ("Dresden", "DE"),
    ("Stuttgart", "DE"), ("Leipzig", "DE"), ("Jena", "DE"), ("Cologne", "DE"),
    ("Vienna", "AT"), ("Zurich", "CH"), ("Boston", "US"),
]

ASSIGNEE_POOL = [
    ("Siemens Aktiengesellschaft", "DE"),
    ("General Electric Company", "US"),
    ("Richter Gedeon Nyrt.", "HU"),
    ("Zentiva a.s.", "CZ"),
    ("Adamed Sp. z o.o.", "PL"),
    ("Nokia Corporation", "FI"),
    ("No-Country Holdings", None),
]


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def corpus_2007() -> list[PatentRecord]:
    with open(DATA_DIR / "corpus_2007.jsonl", encoding="utf-8") as fh:
        return parse_record_stream(fh)


@pytest.fixture(scope="session")
def czech_8185() -> list[PatentRecord]:
    with open(DATA_DIR / "czech_8185.jsonl", encoding="utf-8") as fh:
        return parse_record_stream(fh)


@pytest.fixture(scope="session")
def gazetteer() -> Gazetteer:
    return Gazetteer.load(DATA_DIR / "gazetteer.csv")


@pytest.fixture()
def geocoder(gazetteer) -> Geocoder:
    return Geocoder(gazetteer)


def make_random_corpus(
    n: int,
    seed: int = 42,
    year_from: int = 2000,
    year_to: int = 2010,
    max_inventors: int = 4,
) -> list[PatentRecord]:
    """Deterministic synthetic corpus for property and performance tests."""
    rng = random.Random(seed)
    records = []
    start = date(year_from, 1, 1)
    span = (date(year_to, 12, 31) - start).days
    for i in range(n):
        k = rng.randint(1, max_inventors)
        inventors = tuple(
            PartyAddress(city=c, country=cc)
            for c, cc in (rng.choice(CITY_POOL) for _ in range(k))
        )
        assignees = []
        for _ in range(rng.randint(0, 2)):
            name, cc = rng.choice(ASSIGNEE_POOL)
            assignees.append(Assignee(name=name, country=cc))
        records.append(
            PatentRecord(
                id=str(8000000 + i),
                grant_date=start + timedelta(days=rng.randint(0, span)),
                inventors=inventors,
                assignees=tuple(assignees),
                cited_by_count=rng.choice([0, 0, 0, 1, 1, 2, 3, 5, 8, 13, 21]),
            )
        )
    return records
