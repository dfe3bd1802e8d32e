"""Deterministic city geocoding against a local gazetteer file.

Replaces online geocoding with a GeoNames-like CSV so runs are
reproducible. The gazetteer is immutable after load; lookups are
read-only and safe to run concurrently.
"""

from __future__ import annotations

import csv
import unicodedata
from dataclasses import dataclass
from typing import Iterable

from .records import PartyAddress

__all__ = [
    "Gazetteer",
    "GazetteerEntry",
    "GazetteerError",
    "Geocoder",
    "GeoLocation",
    "normalize_name",
]


class GazetteerError(ValueError):
    """Raised for an invalid gazetteer file."""


# Latin letters that NFKD does not decompose to ASCII.
_EXTRA_FOLDS = str.maketrans(
    {
        "ł": "l",
        "đ": "d",
        "ø": "o",
        "ß": "ss",
        "æ": "ae",
        "œ": "oe",
        "þ": "th",
        "ð": "d",
    }
)


def normalize_name(raw: str) -> str:
    """Fold a place name to a plain-ASCII lookup key.

    Case-folded, diacritics stripped, punctuation dropped, internal
    whitespace collapsed. Idempotent: normalize(normalize(x)) == normalize(x).
    """
    folded = raw.casefold().translate(_EXTRA_FOLDS)
    decomposed = unicodedata.normalize("NFKD", folded)
    kept: list[str] = []
    for ch in decomposed:
        if unicodedata.combining(ch):
            continue
        if ch.isspace():
            kept.append(" ")
        elif ch.isalnum() and ord(ch) < 128:
            kept.append(ch)
        # anything else is punctuation or unfoldable: dropped
    return " ".join("".join(kept).split())


@dataclass(frozen=True)
class GazetteerEntry:
    """One gazetteer row: canonical name, lookup keys, coordinates, population."""

    name: str
    ascii_name: str
    alternates: frozenset[str]
    country: str
    admin1: str | None
    lat: float
    lon: float
    population: int

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise GazetteerError(f"{self.name}: latitude {self.lat} out of bounds")
        if not -180.0 <= self.lon <= 180.0:
            raise GazetteerError(f"{self.name}: longitude {self.lon} out of bounds")
        if self.population < 0:
            raise GazetteerError(f"{self.name}: negative population")


@dataclass(frozen=True)
class GeoLocation:
    """A resolved address: coordinates plus the population used downstream."""

    lat: float
    lon: float
    matched_name: str
    population: int
    admin1: str | None = None
    ambiguous: bool = False


_HEADER = ["name", "ascii_name", "alternates", "country", "admin1", "lat", "lon", "population"]


class Gazetteer:
    """Lookup index over gazetteer entries.

    Match precedence for an address (city, country):
      1. country + normalized city == ascii_name
      2. country + normalized city in alternates
      3. country + admin1 + name, when the address carries admin1
    Several candidates at the winning tier resolve to the highest
    population, flagged ambiguous (patent addresses name the well-known
    city absent other qualifiers).
    """

    def __init__(self, entries: Iterable[GazetteerEntry]):
        self.entries = tuple(entries)
        self._by_ascii: dict[tuple[str, str], list[GazetteerEntry]] = {}
        self._by_alternate: dict[tuple[str, str], list[GazetteerEntry]] = {}
        for e in self.entries:
            self._by_ascii.setdefault((e.country, e.ascii_name), []).append(e)
            for alt in e.alternates:
                self._by_alternate.setdefault((e.country, alt), []).append(e)

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def load(cls, path) -> "Gazetteer":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise GazetteerError(f"{path}: empty gazetteer") from None
            if header != _HEADER:
                raise GazetteerError(f"{path}: bad header {header!r}")
            entries = []
            for row_no, row in enumerate(reader, start=2):
                if not row or not any(cell.strip() for cell in row):
                    continue
                if len(row) != len(_HEADER):
                    raise GazetteerError(f"{path}:{row_no}: expected {len(_HEADER)} fields")
                name, ascii_name, alternates, country, admin1, lat, lon, population = row
                if ascii_name != normalize_name(name):
                    raise GazetteerError(
                        f"{path}:{row_no}: ascii_name {ascii_name!r} does not match "
                        f"normalize_name({name!r}) = {normalize_name(name)!r}"
                    )
                try:
                    entry = GazetteerEntry(
                        name=name,
                        ascii_name=ascii_name,
                        alternates=frozenset(
                            normalize_name(a) for a in alternates.split(";") if a.strip()
                        ),
                        country=country.strip().upper(),
                        admin1=admin1.strip() or None,
                        lat=float(lat),
                        lon=float(lon),
                        population=int(population),
                    )
                except (ValueError, GazetteerError) as exc:
                    raise GazetteerError(f"{path}:{row_no}: {exc}") from None
                entries.append(entry)
        return cls(entries)

    def countries(self) -> frozenset[str]:
        return frozenset(e.country for e in self.entries)

    def resolve(self, addr: PartyAddress) -> GeoLocation | None:
        """Geocode one address; None when no tier yields a candidate."""
        key = (addr.country, normalize_name(addr.city))
        tiers = [
            self._by_ascii.get(key, []),
            self._by_alternate.get(key, []),
        ]
        if addr.admin1:
            tier3 = [
                e
                for e in self._by_ascii.get(key, []) + self._by_alternate.get(key, [])
                if e.admin1 == addr.admin1
            ]
            tiers.append(tier3)
        for candidates in tiers:
            if not candidates:
                continue
            if len(candidates) == 1:
                winner, ambiguous = candidates[0], False
            else:
                winner = max(candidates, key=lambda e: (e.population, e.ascii_name))
                ambiguous = True
            return GeoLocation(
                lat=winner.lat,
                lon=winner.lon,
                matched_name=winner.name,
                population=winner.population,
                admin1=winner.admin1,
                ambiguous=ambiguous,
            )
        return None


class Geocoder:
    """Stateful wrapper that keeps the unmatched-address report.

    Every address passed through resolve() lands either in a successful
    result or in the unmatched tally, never silently dropped.
    """

    def __init__(self, gazetteer: Gazetteer):
        self.gazetteer = gazetteer
        self.matched_count = 0
        self.unmatched: dict[tuple[str, str | None, str], int] = {}

    def resolve(self, addr: PartyAddress) -> GeoLocation | None:
        loc = self.gazetteer.resolve(addr)
        if loc is None:
            key = (addr.city, addr.admin1, addr.country)
            self.unmatched[key] = self.unmatched.get(key, 0) + 1
        else:
            self.matched_count += 1
        return loc

    @property
    def unmatched_count(self) -> int:
        return sum(self.unmatched.values())

    def unmatched_rate(self) -> float:
        total = self.matched_count + self.unmatched_count
        return self.unmatched_count / total if total else 0.0

    def write_unmatched_report(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["city", "admin1", "country", "occurrences"])
            for (city, admin1, country), n in sorted(self.unmatched.items()):
                writer.writerow([city, admin1 or "", country, n])
