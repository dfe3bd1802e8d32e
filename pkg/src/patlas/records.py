"""Patent record model, corpus parsing, and query filtering.

The canonical corpus format is line-delimited JSON (one record per line,
UTF-8). Records can also be recovered from archived USPTO full-text pages
via :func:`parse_uspto_fulltext`. Parsing is a pure function of its input:
disjoint chunks can be parsed in parallel and concatenated, as long as
duplicate-id detection runs over the merged result.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import date
from enum import Enum
from html.parser import HTMLParser
from typing import Iterable

__all__ = [
    "Assignee",
    "CorpusError",
    "OrgType",
    "PartyAddress",
    "PatentRecord",
    "Query",
    "filter_records",
    "parse_record_line",
    "parse_record_stream",
    "parse_uspto_fulltext",
    "serialize_record",
    "unknown_country_codes",
    "write_corpus",
]

_COUNTRY_RE = re.compile(r"^[A-Z]{2}$")

# ISO 3166-1 alpha-2 officially assigned codes. Codes outside this set are
# accepted (transcription noise exists in the source data) but are flagged
# by unknown_country_codes() for the ingest validation report.
ISO_3166_ALPHA2 = frozenset(
    """
    AD AE AF AG AI AL AM AO AQ AR AS AT AU AW AX AZ BA BB BD BE BF BG BH BI
    BJ BL BM BN BO BQ BR BS BT BV BW BY BZ CA CC CD CF CG CH CI CK CL CM CN
    CO CR CU CV CW CX CY CZ DE DJ DK DM DO DZ EC EE EG EH ER ES ET FI FJ FK
    FM FO FR GA GB GD GE GF GG GH GI GL GM GN GP GQ GR GS GT GU GW GY HK HM
    HN HR HT HU ID IE IL IM IN IO IQ IR IS IT JE JM JO JP KE KG KH KI KM KN
    KP KR KW KY KZ LA LB LC LI LK LR LS LT LU LV LY MA MC MD ME MF MG MH MK
    ML MM MN MO MP MQ MR MS MT MU MV MW MX MY MZ NA NC NE NF NG NI NL NO NP
    NR NU NZ OM PA PE PF PG PH PK PL PM PN PR PS PT PW PY QA RE RO RS RU RW
    SA SB SC SD SE SG SH SI SJ SK SL SM SN SO SR SS ST SV SX SY SZ TC TD TF
    TG TH TJ TK TL TM TN TO TR TT TV TW TZ UA UG UM US UY UZ VA VC VE VG VI
    VN VU WF WS YE YT ZA ZM ZW
    """.split()
)

# Two-letter USPS state/territory abbreviations. On archived USPTO pages a
# US inventor shows "(City, ST)" while a foreign one shows "(City, CC)";
# the state set disambiguates the two-letter token.
US_STATE_CODES = frozenset(
    """
    AL AK AZ AR CA CO CT DE FL GA HI ID IL IN IA KS KY LA ME MD MA MI MN MS
    MO MT NE NV NH NJ NM NY NC ND OH OK OR PA RI SC SD TN TX UT VT VA WA WV
    WI WY DC PR GU VI AS MP
    """.split()
)


class CorpusError(ValueError):
    """Raised for malformed corpus input; message carries the location."""


class OrgType(Enum):
    """Assignee organisation type annotation (pass-through metadata)."""

    SME = "SME"
    BIG_DOMESTIC = "BigDomestic"
    MNE = "MNE"
    INDIVIDUAL = "Individual"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class PartyAddress:
    """City-level address of an inventor (or assignee seat)."""

    city: str
    country: str
    admin1: str | None = None

    def __post_init__(self) -> None:
        if not self.city.strip():
            raise ValueError("address city must be non-empty")
        if not _COUNTRY_RE.match(self.country):
            raise ValueError(f"country must be a 2-letter uppercase code, got {self.country!r}")


@dataclass(frozen=True)
class Assignee:
    """Legal owner of the patent right; country may be unknown."""

    name: str
    country: str | None = None
    org_type: OrgType = OrgType.UNKNOWN

    def __post_init__(self) -> None:
        if self.country is not None and not _COUNTRY_RE.match(self.country):
            raise ValueError(f"assignee country must be a 2-letter code, got {self.country!r}")


@dataclass(frozen=True)
class PatentRecord:
    """One granted patent: identity, grant date, parties, citations received."""

    id: str
    grant_date: date
    inventors: tuple[PartyAddress, ...]
    assignees: tuple[Assignee, ...] = ()
    cited_by_count: int = 0

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("patent id must be non-empty")
        if not self.inventors:
            raise ValueError(f"patent {self.id}: no inventors")
        if self.cited_by_count < 0:
            raise ValueError(f"patent {self.id}: cited_by_count must be >= 0")

    def inventor_countries(self) -> frozenset[str]:
        return frozenset(a.country for a in self.inventors)


@dataclass(frozen=True)
class Query:
    """Record selection: inventor countries plus an inclusive grant-date range."""

    inventor_countries: frozenset[str]
    date_from: date
    date_to: date

    def __post_init__(self) -> None:
        if not self.inventor_countries:
            raise ValueError("query needs at least one inventor country")
        if self.date_from > self.date_to:
            raise ValueError("query date_from must be <= date_to")

    def matches(self, record: PatentRecord) -> bool:
        if not (self.date_from <= record.grant_date <= self.date_to):
            return False
        return any(a.country in self.inventor_countries for a in record.inventors)


# ---------------------------------------------------------------------------
# Line-delimited corpus format
# ---------------------------------------------------------------------------


def _parse_address(obj: object, where: str) -> PartyAddress:
    if not isinstance(obj, dict):
        raise CorpusError(f"{where}: inventor entry must be an object")
    try:
        city = str(obj["city"]).strip()
        country = str(obj["country"]).strip().upper()
    except KeyError as exc:
        raise CorpusError(f"{where}: inventor entry missing {exc.args[0]!r}") from None
    admin1 = obj.get("admin1")
    if admin1 is not None:
        admin1 = str(admin1).strip() or None
    try:
        return PartyAddress(city=city, country=country, admin1=admin1)
    except ValueError as exc:
        raise CorpusError(f"{where}: {exc}") from None


def _parse_assignee(obj: object, where: str) -> Assignee:
    if not isinstance(obj, dict):
        raise CorpusError(f"{where}: assignee entry must be an object")
    name = str(obj.get("name", "")).strip()
    if not name:
        raise CorpusError(f"{where}: assignee entry missing 'name'")
    country = obj.get("country")
    if country is not None:
        country = str(country).strip().upper() or None
    org_raw = obj.get("org_type")
    if org_raw is None:
        org = OrgType.UNKNOWN
    else:
        try:
            org = OrgType(str(org_raw))
        except ValueError:
            raise CorpusError(f"{where}: unknown org_type {org_raw!r}") from None
    try:
        return Assignee(name=name, country=country, org_type=org)
    except ValueError as exc:
        raise CorpusError(f"{where}: {exc}") from None


def parse_record_line(line: str, lineno: int = 0) -> PatentRecord:
    """Parse a single corpus line. Unknown keys are ignored."""
    where = f"line {lineno}" if lineno else "record"
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{where}: invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise CorpusError(f"{where}: record must be a JSON object")

    rec_id = str(obj.get("id", "")).strip()
    if not rec_id:
        raise CorpusError(f"{where}: missing or empty id")

    raw_date = obj.get("grant_date")
    if not isinstance(raw_date, str):
        raise CorpusError(f"{where}: missing grant_date")
    try:
        grant = date.fromisoformat(raw_date)
    except ValueError:
        raise CorpusError(f"{where}: grant_date {raw_date!r} is not an ISO-8601 date") from None

    inventors_raw = obj.get("inventors")
    if not inventors_raw:
        raise CorpusError(f"no inventors, {where}")
    inventors = tuple(_parse_address(a, where) for a in inventors_raw)

    assignees = tuple(_parse_assignee(a, where) for a in obj.get("assignees") or ())

    cited = obj.get("cited_by_count", 0)
    if not isinstance(cited, int) or isinstance(cited, bool) or cited < 0:
        raise CorpusError(f"{where}: cited_by_count must be a non-negative integer")

    return PatentRecord(
        id=rec_id,
        grant_date=grant,
        inventors=inventors,
        assignees=assignees,
        cited_by_count=cited,
    )


def parse_record_stream(lines: Iterable[str]) -> list[PatentRecord]:
    """Parse a line-delimited corpus, in input order.

    Blank lines are skipped. Raises CorpusError on the first malformed
    line (with its line number) or on a duplicate patent id.
    """
    records: list[PatentRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        record = parse_record_line(line, lineno)
        if record.id in seen:
            raise CorpusError(f"line {lineno}: duplicate patent id {record.id}")
        seen.add(record.id)
        records.append(record)
    return records


def serialize_record(record: PatentRecord) -> str:
    """Render one record as its canonical corpus line (no trailing newline).

    parse_record_line(serialize_record(r)) == r for every valid record.
    """
    inventors = []
    for a in record.inventors:
        entry: dict[str, object] = {"city": a.city}
        if a.admin1 is not None:
            entry["admin1"] = a.admin1
        entry["country"] = a.country
        inventors.append(entry)
    assignees = []
    for s in record.assignees:
        entry = {"name": s.name}
        if s.country is not None:
            entry["country"] = s.country
        if s.org_type is not OrgType.UNKNOWN:
            entry["org_type"] = s.org_type.value
        assignees.append(entry)
    obj = {
        "id": record.id,
        "grant_date": record.grant_date.isoformat(),
        "inventors": inventors,
        "assignees": assignees,
        "cited_by_count": record.cited_by_count,
    }
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def write_corpus(records: Iterable[PatentRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(serialize_record(record) + "\n")


def filter_records(records: Iterable[PatentRecord], query: Query) -> list[PatentRecord]:
    """Keep records inside the query date range with >= 1 inventor in the
    requested countries; input order preserved."""
    return [r for r in records if query.matches(r)]


def unknown_country_codes(records: Iterable[PatentRecord]) -> dict[str, int]:
    """Count occurrences of country codes outside ISO 3166-1 (flagged, not
    rejected: source data carries transcription noise)."""
    counts: dict[str, int] = {}
    for record in records:
        codes = [a.country for a in record.inventors]
        codes += [s.country for s in record.assignees if s.country]
        for code in codes:
            if code not in ISO_3166_ALPHA2:
                counts[code] = counts.get(code, 0) + 1
    return dict(sorted(counts.items()))


# ---------------------------------------------------------------------------
# Archived USPTO full-text pages
# ---------------------------------------------------------------------------


_MONTHS = {
    name: i
    for i, name in enumerate(
        [
            "January", "February", "March", "April", "May", "June",
            "July", "August", "September", "October", "November", "December",
        ],
        start=1,
    )
}

_LONG_DATE_RE = re.compile(r"\b([A-Z][a-z]+)\s+(\d{1,2}),\s*(\d{4})\b")
_PATENT_NO_RE = re.compile(r"United States Patent:?\s*([0-9][0-9,]*)")
_PARTY_RE = re.compile(r"\(([^(),]+?),\s*([A-Z]{2})\s*\)")
_SECTION_LABELS = ("Assignee:", "Appl. No.:", "Family ID:", "Filed:", "Abstract")


class _TextExtractor(HTMLParser):
    """Flatten an HTML page to plain text, tags replaced by spaces."""

    def __init__(self) -> None:
        super().__init__()
        self.chunks: list[str] = []

    def handle_data(self, data: str) -> None:
        self.chunks.append(data)

    def handle_starttag(self, tag, attrs) -> None:
        self.chunks.append(" ")

    def handle_endtag(self, tag) -> None:
        self.chunks.append(" ")

    def text(self) -> str:
        return re.sub(r"[ \t]+", " ", "".join(self.chunks))


def _page_text(page: str) -> str:
    extractor = _TextExtractor()
    extractor.feed(page)
    return extractor.text()


def _parse_long_date(text: str) -> date | None:
    m = _LONG_DATE_RE.search(text)
    if not m:
        return None
    month = _MONTHS.get(m.group(1))
    if month is None:
        return None
    return date(int(m.group(3)), month, int(m.group(2)))


def _parse_parties(block: str, *, us_states: bool) -> list[PartyAddress]:
    parties = []
    for m in _PARTY_RE.finditer(block):
        city = m.group(1).strip()
        code = m.group(2)
        if us_states and code in US_STATE_CODES:
            parties.append(PartyAddress(city=city, country="US", admin1=code))
        else:
            parties.append(PartyAddress(city=city, country=code))
    return parties


def parse_uspto_fulltext(page: str, cited_by: int | None = None) -> PatentRecord:
    """Extract one record from an archived USPTO granted-patent page.

    The parser targets the saved full-text page layout shipped in the
    fixture set: a header with the patent number and issue date, an
    "Inventors:" row and an optional "Assignee:" row. Citation counts are
    not on the page itself; pass them via `cited_by` (0 when absent).
    """
    text = _page_text(page)
    if not text.strip():
        raise CorpusError("unparsable: empty document")

    m = _PATENT_NO_RE.search(text)
    if not m:
        raise CorpusError("unparsable: no patent number")
    patent_id = m.group(1).replace(",", "")

    inv_start = text.find("Inventors:")
    if inv_start < 0:
        raise CorpusError("unparsable: no inventor section")
    inv_end = len(text)
    for label in _SECTION_LABELS:
        pos = text.find(label, inv_start)
        if pos >= 0:
            inv_end = min(inv_end, pos)
    inventor_block = text[inv_start + len("Inventors:"):inv_end]
    inventors = _parse_parties(inventor_block, us_states=True)
    if not inventors:
        raise CorpusError("unparsable: no inventor section")

    # Issue date sits in the header, before the inventor table; "Filed:"
    # and other dates come later, so the first long-form date wins.
    issued = _parse_long_date(text[:inv_start])
    if issued is None:
        raise CorpusError("unparsable: no issue date")

    assignees: list[Assignee] = []
    asg_start = text.find("Assignee:")
    if asg_start >= 0:
        asg_end = len(text)
        for label in _SECTION_LABELS[1:]:
            pos = text.find(label, asg_start)
            if pos >= 0:
                asg_end = min(asg_end, pos)
        block = text[asg_start + len("Assignee:"):asg_end]
        # Entries look like "Name (City, CC)"; split on the closing paren.
        for part in re.split(r"\)\s*[,;]?", block):
            part = part.strip()
            if not part or "(" not in part:
                continue
            name, _, seat = part.partition("(")
            name = re.sub(r"\s+", " ", name).strip(" ,;")
            if not name:
                continue
            seat_m = re.search(r",\s*([A-Z]{2})\s*$", seat)
            country = None
            if seat_m:
                code = seat_m.group(1)
                country = "US" if code in US_STATE_CODES else code
            assignees.append(Assignee(name=name, country=country))

    return PatentRecord(
        id=patent_id,
        grant_date=issued,
        inventors=tuple(inventors),
        assignees=tuple(assignees),
        cited_by_count=cited_by or 0,
    )
