"""Command-line pipeline: ingest, run, periods, report.

Everything is deterministic: no clock, locale, or RNG dependence. Output
files are written atomically (temp file + rename) and every run ends by
writing a manifest of artifact content hashes, so identical inputs and
configuration produce byte-identical output trees.

Exit codes: 0 success, 1 I/O or parse failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from . import citystats, concentration, control, overlay, records
from .concentration import GroupSelector
from .gazetteer import Gazetteer, GazetteerError, Geocoder
from .records import CorpusError, PatentRecord, Query

__all__ = ["RunConfig", "load_config", "main"]

UNMATCHED_WARN_RATE = 0.20

DEFAULT_GROUPS = {
    "CEE": "CZ,HU,PL,SK",
    "DE-East": "DE:BB|MV|SN|ST|TH|BE",
    "DE-West": "DE:!BB|MV|SN|ST|TH|BE",
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    corpus: Path | None = None
    gazetteer: Path | None = None
    out: Path | None = None
    countries: tuple[str, ...] = ()
    date_from: date | None = None
    date_to: date | None = None
    top_cited_fraction: float = 0.10
    min_patents: int = 2
    counting_mode: str = "whole"
    windows: tuple[tuple[int, int], ...] = ()
    groups: dict[str, GroupSelector] = field(default_factory=dict)

    def query(self) -> Query:
        if not self.countries:
            raise ConfigError("no query countries given (--countries or config)")
        if self.date_from is None or self.date_to is None:
            raise ConfigError("query needs --from and --to dates")
        return Query(
            inventor_countries=frozenset(self.countries),
            date_from=self.date_from,
            date_to=self.date_to,
        )


def _parse_window(text: str) -> tuple[int, int]:
    try:
        start, _, end = text.partition("-")
        window = (int(start), int(end))
    except ValueError:
        raise ConfigError(f"bad window {text!r}, expected YYYY-YYYY") from None
    if window[0] > window[1]:
        raise ConfigError(f"window {text!r} is reversed")
    return window


def _parse_date(text: str, flag: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise ConfigError(f"{flag}: {text!r} is not an ISO-8601 date") from None


def load_config(path: Path) -> dict[str, str]:
    """Flat key = value file; '#' starts a comment; keys may be dotted."""
    raw: dict[str, str] = {}
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        raw[key.strip()] = value.strip()
    return raw


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge config file (or PATLAS_CONFIG) with CLI flags; flags win."""
    config_path = getattr(args, "config", None)
    if config_path is None and os.environ.get("PATLAS_CONFIG"):
        config_path = Path(os.environ["PATLAS_CONFIG"])
    raw = load_config(Path(config_path)) if config_path else {}

    cfg = RunConfig()
    if "corpus" in raw:
        cfg.corpus = Path(raw["corpus"])
    if "gazetteer" in raw:
        cfg.gazetteer = Path(raw["gazetteer"])
    if "out" in raw:
        cfg.out = Path(raw["out"])
    if "countries" in raw:
        cfg.countries = tuple(
            c.strip().upper() for c in raw["countries"].split(",") if c.strip()
        )
    if "from" in raw:
        cfg.date_from = _parse_date(raw["from"], "from")
    if "to" in raw:
        cfg.date_to = _parse_date(raw["to"], "to")
    try:
        if "top_cited_fraction" in raw:
            cfg.top_cited_fraction = float(raw["top_cited_fraction"])
        if "min_patents" in raw:
            cfg.min_patents = int(raw["min_patents"])
    except ValueError as exc:
        raise ConfigError(f"bad numeric config value: {exc}") from None
    if "counting_mode" in raw:
        cfg.counting_mode = raw["counting_mode"]
    if "windows" in raw:
        cfg.windows = tuple(
            _parse_window(w.strip()) for w in raw["windows"].split(",") if w.strip()
        )
    group_specs = {
        key[len("group."):]: value for key, value in raw.items() if key.startswith("group.")
    }
    if not group_specs:
        group_specs = dict(DEFAULT_GROUPS)
    for name, spec in sorted(group_specs.items()):
        try:
            cfg.groups[name] = GroupSelector.parse(spec)
        except ValueError as exc:
            raise ConfigError(f"group {name!r}: {exc}") from None

    # CLI flags override the file.
    if getattr(args, "corpus", None):
        cfg.corpus = Path(args.corpus)
    if getattr(args, "gazetteer", None):
        cfg.gazetteer = Path(args.gazetteer)
    if getattr(args, "out", None):
        cfg.out = Path(args.out)
    if getattr(args, "countries", None):
        cfg.countries = tuple(
            c.strip().upper() for c in args.countries.split(",") if c.strip()
        )
    if getattr(args, "date_from", None):
        cfg.date_from = _parse_date(args.date_from, "--from")
    if getattr(args, "date_to", None):
        cfg.date_to = _parse_date(args.date_to, "--to")
    if getattr(args, "top_fraction", None) is not None:
        cfg.top_cited_fraction = args.top_fraction
    if getattr(args, "min_patents", None) is not None:
        cfg.min_patents = args.min_patents
    if getattr(args, "counting", None):
        cfg.counting_mode = args.counting
    if getattr(args, "windows", None):
        cfg.windows = tuple(
            _parse_window(w.strip()) for w in args.windows.split(",") if w.strip()
        )

    if not 0.0 < cfg.top_cited_fraction < 1.0:
        raise ConfigError("top_cited_fraction must be in (0, 1)")
    if cfg.min_patents < 1:
        raise ConfigError("min_patents must be >= 1")
    if cfg.counting_mode not in ("whole", "fractional"):
        raise ConfigError("counting_mode must be 'whole' or 'fractional'")
    for i, a in enumerate(cfg.windows):
        for b in cfg.windows[i + 1:]:
            if a[0] <= b[1] and b[0] <= a[1]:
                print(f"warning: windows {a} and {b} overlap", file=sys.stderr)
    return cfg


# ---------------------------------------------------------------------------
# Output plumbing
# ---------------------------------------------------------------------------


@contextmanager
def _atomic(path: Path):
    """Yield a temp path, renamed onto `path` on success."""
    tmp = path.with_name(path.name + ".part")
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def _write_text(path: Path, text: str) -> None:
    with _atomic(path) as tmp:
        tmp.write_text(text, encoding="utf-8", newline="\n")


def _write_via(path: Path, writer_fn) -> None:
    with _atomic(path) as tmp:
        writer_fn(tmp)


def _write_manifest(out_dir: Path, names: list[str]) -> None:
    lines = []
    for name in sorted(names):
        digest = hashlib.sha256((out_dir / name).read_bytes()).hexdigest()
        lines.append(f"{digest}  {name}")
    _write_text(out_dir / "manifest.txt", "\n".join(lines) + "\n")


def _load_corpus(path: Path | None) -> list[PatentRecord]:
    if path is None:
        raise ConfigError("no corpus given (--corpus or config)")
    with open(path, encoding="utf-8") as fh:
        return records.parse_record_stream(fh)


def _load_gazetteer(path: Path | None) -> Gazetteer:
    if path is None:
        raise ConfigError("no gazetteer given (--gazetteer or config)")
    return Gazetteer.load(path)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    out_path = Path(args.out)
    report_path = Path(args.report) if args.report else out_path.with_suffix(".report.csv")

    merged: list[PatentRecord] = []
    seen: set[str] = set()
    rejects: list[tuple[str, str, str]] = []  # reason, source, detail

    def add(record: PatentRecord, source: str) -> None:
        if record.id in seen:
            if not any(r[0] == "duplicate_id" and r[2] == record.id for r in rejects):
                rejects.append(("duplicate_id", source, record.id))
            return
        seen.add(record.id)
        merged.append(record)

    def ingest_page(page_path: Path, citations: dict[str, int]) -> None:
        text = page_path.read_text(encoding="utf-8")
        record = records.parse_uspto_fulltext(text)
        if record.id in citations:
            record = records.PatentRecord(
                id=record.id,
                grant_date=record.grant_date,
                inventors=record.inventors,
                assignees=record.assignees,
                cited_by_count=citations[record.id],
            )
        add(record, str(page_path))

    for raw in args.inputs:
        src = Path(raw)
        if src.is_dir():
            citations: dict[str, int] = {}
            sidecar = src / "citations.json"
            if sidecar.exists():
                citations = {
                    str(k): int(v) for k, v in json.loads(sidecar.read_text()).items()
                }
            pages = sorted(p for p in src.iterdir() if p.suffix in (".htm", ".html"))
            for page in pages:
                ingest_page(page, citations)
        elif src.suffix in (".htm", ".html"):
            ingest_page(src, {})
        else:
            with open(src, encoding="utf-8") as fh:
                for record in records.parse_record_stream(fh):
                    add(record, str(src))

    for code, n in records.unknown_country_codes(merged).items():
        rejects.append(("unknown_country", "corpus", f"{code} x{n}"))

    out_path.parent.mkdir(parents=True, exist_ok=True)
    with _atomic(out_path) as tmp:
        records.write_corpus(merged, tmp)
    with _atomic(report_path) as tmp:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["reason", "source", "detail"])
            writer.writerows(rejects)
    print(f"ingested {len(merged)} records -> {out_path} ({len(rejects)} report rows)")
    return 0


def _map_outputs(
    corpus: list[PatentRecord],
    cfg: RunConfig,
    gazetteer: Gazetteer,
    out_dir: Path,
    prefix: str = "",
) -> tuple[list[str], Geocoder, list[citystats.CityAggregate]]:
    """Shared map pipeline: aggregate, score, emit tables and overlays."""
    top = citystats.top_cited_set(corpus, cfg.top_cited_fraction)
    geocoder = Geocoder(gazetteer)
    aggregates = citystats.aggregate_by_city(corpus, geocoder, top)
    scored = citystats.score_cities(aggregates, len(corpus), len(top), cfg.min_patents)

    written: list[str] = []

    def emit(name: str, text: str) -> None:
        _write_text(out_dir / name, text)
        written.append(name)

    citation_nodes = overlay.build_citation_overlay(scored, cfg.min_patents)
    portfolio_nodes = overlay.build_portfolio_overlay(scored, cfg.min_patents)
    emit(f"{prefix}citation.kml", overlay.emit_kml(citation_nodes, f"{prefix}citation"))
    emit(f"{prefix}citation.geojson", overlay.emit_geojson(citation_nodes, "citation"))
    emit(f"{prefix}portfolio.kml", overlay.emit_kml(portfolio_nodes, f"{prefix}portfolio"))
    emit(f"{prefix}portfolio.geojson", overlay.emit_geojson(portfolio_nodes, "portfolio"))

    _write_via(out_dir / f"{prefix}cities.csv", lambda p: citystats.write_city_table(scored, p))
    written.append(f"{prefix}cities.csv")
    _write_via(out_dir / f"{prefix}unmatched.csv", geocoder.write_unmatched_report)
    written.append(f"{prefix}unmatched.csv")
    return written, geocoder, aggregates


def cmd_run(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    query = cfg.query()
    corpus = _load_corpus(cfg.corpus)
    gazetteer = _load_gazetteer(cfg.gazetteer)
    if cfg.out is None:
        raise ConfigError("no output directory given (--out or config)")
    out_dir = cfg.out
    out_dir.mkdir(parents=True, exist_ok=True)

    selected = records.filter_records(corpus, query)
    written, geocoder, aggregates = _map_outputs(selected, cfg, gazetteer, out_dir)

    # Control tables over the query countries.
    summaries = [control.control_summary(selected, c) for c in sorted(cfg.countries)]
    _write_via(out_dir / "control.csv", lambda p: control.write_control_csv(summaries, p))
    written.append("control.csv")

    series = [control.ownership_series(selected, c) for c in sorted(cfg.countries)]
    _write_via(out_dir / "ownership.csv", lambda p: control.write_ownership_csv(series, p))
    written.append("ownership.csv")

    if cfg.windows:
        per_country = {
            c: control.five_year_averages(
                citystats.country_year_counts(selected, c, cfg.counting_mode), cfg.windows
            )
            for c in sorted(cfg.countries)
        }
        _write_via(out_dir / "windows.csv", lambda p: control.write_window_csv(per_country, p))
        written.append("windows.csv")

    # Group concentration series.
    slope_rows: list[tuple[str, float, float, float, int]] = []
    for name in sorted(cfg.groups):
        try:
            profile = concentration.build_group(aggregates, gazetteer, cfg.groups[name], name)
        except ValueError as exc:  # selector matches no gazetteer city
            raise ConfigError(str(exc)) from None
        if profile.total_patents() <= 0:
            print(f"warning: group {name} holds no patents; skipped", file=sys.stderr)
            continue
        series_rs = concentration.rank_size_series(profile)
        points = concentration.patenting_intensity(profile)
        _write_via(
            out_dir / f"group_{name}_rank_size.csv",
            lambda p, s=series_rs: concentration.write_rank_size_csv(s, p),
        )
        written.append(f"group_{name}_rank_size.csv")
        _write_via(
            out_dir / f"group_{name}_intensity.csv",
            lambda p, pts=points: concentration.write_intensity_csv(pts, p),
        )
        written.append(f"group_{name}_intensity.csv")
        log_pairs = [(math.log(rank), math.log(pat)) for rank, pat in series_rs]
        if len(log_pairs) >= 2 and len({x for x, _ in log_pairs}) >= 2:
            slope, intercept, r2 = concentration.loglog_slope(log_pairs)
            slope_rows.append((name, slope, intercept, r2, len(log_pairs)))
    if slope_rows:
        def write_slopes(path):
            with open(path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["group", "slope", "intercept", "r2", "n"])
                for name, slope, intercept, r2, n in slope_rows:
                    writer.writerow(
                        [name, f"{slope:.6f}", f"{intercept:.6f}", f"{r2:.6f}", n]
                    )

        _write_via(out_dir / "slopes.csv", write_slopes)
        written.append("slopes.csv")

    _write_manifest(out_dir, written)

    if geocoder.unmatched_rate() > UNMATCHED_WARN_RATE:
        print(
            f"warning: unmatched geocode rate {geocoder.unmatched_rate():.1%} "
            f"exceeds {UNMATCHED_WARN_RATE:.0%}",
            file=sys.stderr,
        )
    print(
        f"run complete: {len(selected)} of {len(corpus)} records selected, "
        f"{len(written)} artifacts in {out_dir}"
    )
    return 0


def cmd_periods(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    if not cfg.windows:
        raise ConfigError("periods needs windows (--windows or config)")
    if not cfg.countries:
        raise ConfigError("no query countries given (--countries or config)")
    corpus = _load_corpus(cfg.corpus)
    gazetteer = _load_gazetteer(cfg.gazetteer)
    if cfg.out is None:
        raise ConfigError("no output directory given (--out or config)")
    out_dir = cfg.out
    out_dir.mkdir(parents=True, exist_ok=True)

    written: list[str] = []
    for start, end in cfg.windows:
        query = Query(
            inventor_countries=frozenset(cfg.countries),
            date_from=date(start, 1, 1),
            date_to=date(end, 12, 31),
        )
        selected = records.filter_records(corpus, query)
        names, _, _ = _map_outputs(selected, cfg, gazetteer, out_dir, prefix=f"{start}-{end}_")
        written += names
    _write_manifest(out_dir, written)
    print(f"periods complete: {len(cfg.windows)} windows in {out_dir}")
    return 0


def _render_table(rows: list[list[str]]) -> str:
    if not rows:
        return "(empty)\n"
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def cmd_report(args: argparse.Namespace) -> int:
    out_dir = Path(args.dir)
    chunks: list[str] = []
    for name, title in (
        ("control.csv", "Foreign control"),
        ("windows.csv", "Average granted patents per year"),
        ("ownership.csv", "Foreign ownership share"),
    ):
        path = out_dir / name
        if not path.exists():
            continue
        with open(path, encoding="utf-8", newline="") as fh:
            rows = [list(row) for row in csv.reader(fh)]
        chunks.append(f"== {title} ==\n{_render_table(rows)}")
    text = "\n".join(chunks) if chunks else "(no report tables found)\n"
    if args.out:
        _write_text(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patlas",
        description="Patent atlas pipeline: parse, geocode, analyse, map.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="merge corpora and archived pages")
    p_ingest.add_argument("inputs", nargs="+", help="corpus files, page files, or page dirs")
    p_ingest.add_argument("--out", required=True, help="merged corpus output path")
    p_ingest.add_argument("--report", help="validation report path")
    p_ingest.set_defaults(handler=cmd_ingest)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--corpus", help="line-delimited corpus file")
        p.add_argument("--gazetteer", help="gazetteer CSV")
        p.add_argument("--config", help="config file (or PATLAS_CONFIG)")
        p.add_argument("--countries", help="comma-separated inventor countries")
        p.add_argument("--out", help="output directory")
        p.add_argument("--top-fraction", type=float, dest="top_fraction",
                       help="highly-cited fraction (default 0.10)")
        p.add_argument("--min-patents", type=int, dest="min_patents",
                       help="map threshold (default 2)")
        p.add_argument("--counting", choices=["whole", "fractional"],
                       help="window counting mode")

    p_run = sub.add_parser("run", help="full pipeline for one query")
    add_common(p_run)
    p_run.add_argument("--from", dest="date_from", help="grant date from (ISO)")
    p_run.add_argument("--to", dest="date_to", help="grant date to (ISO)")
    p_run.add_argument("--windows", help="comma-separated YYYY-YYYY windows")
    p_run.set_defaults(handler=cmd_run)

    p_periods = sub.add_parser("periods", help="overlay series per time window")
    add_common(p_periods)
    p_periods.add_argument("--windows", help="comma-separated YYYY-YYYY windows")
    p_periods.set_defaults(handler=cmd_periods)

    p_report = sub.add_parser("report", help="render run CSVs as plain text")
    p_report.add_argument("dir", help="run output directory")
    p_report.add_argument("--out", help="write the summary here instead of stdout")
    p_report.set_defaults(handler=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CorpusError, GazetteerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
