"""Parse raw event records and resolve them to county identity and coordinates.

Events arrive as CSV or JSONL extracts; each record is resolved against a
bundled county gazetteer (explicit county name first, then a ZIP code found
in the free-text address). Coordinates of record are county centroids.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from datetime import date
from importlib import resources

from .errors import FormatError, GazetteerError, SchemaError, UnresolvedLocationError

# Default analysis window; ingest rejects events dated outside it.
DEFAULT_STUDY_WINDOW = (date(2000, 1, 1), date(2011, 12, 31))

EVENT_COLUMNS = ["id", "date", "state", "county", "address", "event_type", "report_text"]

_ZIP_RE = re.compile(r"\b(\d{5})\b")


@dataclass(frozen=True)
class RawEvent:
    id: str
    date: date
    state: str
    county_name: str | None
    address: str | None
    event_type: str
    report_text: str


@dataclass(frozen=True)
class GeoEvent:
    id: str
    date: date
    state: str
    county_name: str  # canonical gazetteer spelling
    address: str | None
    event_type: str
    report_text: str
    fips: str
    lat: float
    lon: float


@dataclass(frozen=True)
class GazetteerEntry:
    fips: str
    state: str
    county_name: str
    lat: float
    lon: float
    zips: tuple[str, ...]


class Gazetteer:
    """County lookup by (state, normalized name) and by ZIP code."""

    def __init__(self, entries: list[GazetteerEntry]):
        self.entries = entries
        self.by_fips: dict[str, GazetteerEntry] = {}
        self.by_name: dict[tuple[str, str], GazetteerEntry] = {}
        self.by_zip: dict[str, GazetteerEntry] = {}
        for e in entries:
            if e.fips in self.by_fips:
                raise GazetteerError(f"duplicate FIPS {e.fips}")
            if not (-90.0 <= e.lat <= 90.0) or not (-180.0 <= e.lon <= 180.0):
                raise GazetteerError(f"coordinate out of range for FIPS {e.fips}")
            self.by_fips[e.fips] = e
            self.by_name[(e.state.upper(), normalize_county_name(e.county_name))] = e
            for z in e.zips:
                if z in self.by_zip and self.by_zip[z].fips != e.fips:
                    raise GazetteerError(f"ZIP {z} maps to multiple FIPS")
                self.by_zip[z] = e

    def __len__(self) -> int:
        return len(self.by_fips)

    def lookup_name(self, state: str, county_name: str) -> GazetteerEntry | None:
        return self.by_name.get((state.upper(), normalize_county_name(county_name)))

    def lookup_zip(self, zip_code: str) -> GazetteerEntry | None:
        return self.by_zip.get(zip_code)


def normalize_county_name(name: str) -> str:
    """Casefold, drop a trailing 'county' word, collapse whitespace."""
    parts = name.casefold().split()
    if len(parts) > 1 and parts[-1] == "county":
        parts = parts[:-1]
    return " ".join(parts)


@dataclass(frozen=True)
class RowError:
    line: int  # 1-based line number in the input (header = line 1 for csv)
    message: str


@dataclass
class ParseResult:
    events: list[RawEvent] = field(default_factory=list)
    errors: list[RowError] = field(default_factory=list)


def _decode(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"input is not valid UTF-8: {exc}") from exc


def _build_event(
    line_no: int,
    rec: dict[str, str],
    window: tuple[date, date],
    event_types: set[str] | None,
    seen_ids: set[str],
    result: ParseResult,
) -> None:
    def err(msg: str) -> None:
        result.errors.append(RowError(line_no, msg))

    event_id = (rec.get("id") or "").strip()
    if not event_id:
        err("empty id")
        return
    if event_id in seen_ids:
        err(f"duplicate id {event_id!r}")
        return
    try:
        when = date.fromisoformat((rec.get("date") or "").strip())
    except ValueError as exc:
        err(f"invalid date: {exc}")
        return
    if not (window[0] <= when <= window[1]):
        err(f"date {when.isoformat()} outside study window")
        return
    county = (rec.get("county") or "").strip() or None
    address = (rec.get("address") or "").strip() or None
    if county is None and address is None:
        err("neither county nor address present")
        return
    event_type = (rec.get("event_type") or "").strip()
    if not event_type:
        err("empty event_type")
        return
    if event_types is not None and event_type not in event_types:
        err(f"unknown event_type {event_type!r}")
        return
    seen_ids.add(event_id)
    result.events.append(
        RawEvent(
            id=event_id,
            date=when,
            state=(rec.get("state") or "").strip().upper(),
            county_name=county,
            address=address,
            event_type=event_type,
            report_text=rec.get("report_text") or "",
        )
    )


def parse_records(
    data: bytes,
    fmt: str = "csv",
    window: tuple[date, date] = DEFAULT_STUDY_WINDOW,
    event_types: set[str] | None = None,
) -> ParseResult:
    """Parse an events extract. Malformed rows become RowErrors, not exceptions.

    fmt is "csv" (header row required) or "jsonl" (one object per line).
    """
    text = _decode(data)
    result = ParseResult()
    seen: set[str] = set()
    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty csv: missing header row")
        missing = [c for c in EVENT_COLUMNS if c not in header]
        if missing:
            raise SchemaError("missing required column(s): " + ", ".join(missing))
        idx = {c: header.index(c) for c in EVENT_COLUMNS}
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                result.errors.append(RowError(line_no, f"expected {len(header)} fields, got {len(row)}"))
                continue
            rec = {c: row[idx[c]] for c in EVENT_COLUMNS}
            _build_event(line_no, rec, window, event_types, seen, result)
    elif fmt == "jsonl":
        # split on plain \n only: JSON escapes \n inside strings, but other
        # unicode line separators (NEL, LS, PS) pass through raw
        for line_no, line in enumerate(text.split("\n"), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                result.errors.append(RowError(line_no, f"invalid json: {exc}"))
                continue
            if not isinstance(obj, dict):
                result.errors.append(RowError(line_no, "expected a json object"))
                continue
            missing = [c for c in ("id", "date", "event_type") if c not in obj]
            if missing:
                result.errors.append(RowError(line_no, "missing field(s): " + ", ".join(missing)))
                continue
            rec = {c: "" if obj.get(c) is None else str(obj.get(c)) for c in EVENT_COLUMNS}
            _build_event(line_no, rec, window, event_types, seen, result)
    else:
        raise FormatError(f"unknown format {fmt!r}")
    return result


def serialize_records(events: list[RawEvent] | list[GeoEvent], fmt: str = "csv") -> bytes:
    """Inverse of parse_records for well-formed events (GeoEvent degrades to its raw fields)."""
    if fmt == "csv":
        buf = io.StringIO()
        # CRLF terminator per RFC 4180; also makes the writer quote embedded CR/LF
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(EVENT_COLUMNS)
        for ev in events:
            writer.writerow(
                [ev.id, ev.date.isoformat(), ev.state, ev.county_name or "",
                 ev.address or "", ev.event_type, ev.report_text]
            )
        return buf.getvalue().encode("utf-8")
    if fmt == "jsonl":
        lines = []
        for ev in events:
            lines.append(
                json.dumps(
                    {
                        "id": ev.id,
                        "date": ev.date.isoformat(),
                        "state": ev.state,
                        "county": ev.county_name,
                        "address": ev.address,
                        "event_type": ev.event_type,
                        "report_text": ev.report_text,
                    },
                    ensure_ascii=False,
                )
            )
        return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
    raise FormatError(f"unknown format {fmt!r}")


def load_gazetteer(data: bytes) -> Gazetteer:
    """Load a gazetteer CSV (fips,state,county_name,lat,lon,zips with ';'-separated ZIPs)."""
    text = _decode(data)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty gazetteer")
    required = ["fips", "state", "county_name", "lat", "lon", "zips"]
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError("gazetteer missing column(s): " + ", ".join(missing))
    idx = {c: header.index(c) for c in required}
    entries = []
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        try:
            lat = float(row[idx["lat"]])
            lon = float(row[idx["lon"]])
        except ValueError as exc:
            raise GazetteerError(f"bad coordinate in row {row!r}: {exc}") from exc
        zips = tuple(z.strip() for z in row[idx["zips"]].split(";") if z.strip())
        entries.append(
            GazetteerEntry(
                fips=row[idx["fips"]].strip(),
                state=row[idx["state"]].strip().upper(),
                county_name=row[idx["county_name"]].strip(),
                lat=lat,
                lon=lon,
                zips=zips,
            )
        )
    return Gazetteer(entries)


def bundled_gazetteer() -> Gazetteer:
    """The Kansas county gazetteer shipped with the package (approximate centroids)."""
    data = resources.files("eventmap").joinpath("data/gazetteer_ks.csv").read_bytes()
    return load_gazetteer(data)


def georeference(event: RawEvent, gaz: Gazetteer) -> GeoEvent:
    """Resolve an event to a county: explicit county name first, then address ZIP.

    Pure: same (event, gazetteer) always yields the same GeoEvent; coordinates
    are the gazetteer centroid, bit-for-bit.
    """
    entry = None
    if event.county_name:
        entry = gaz.lookup_name(event.state, event.county_name)
    if entry is None and event.address:
        # last resolvable 5-digit group wins; US addresses end with the ZIP
        for z in reversed(_ZIP_RE.findall(event.address)):
            entry = gaz.lookup_zip(z)
            if entry is not None:
                break
    if entry is None:
        raise UnresolvedLocationError(event.id)
    return GeoEvent(
        id=event.id,
        date=event.date,
        state=event.state,
        county_name=entry.county_name,
        address=event.address,
        event_type=event.event_type,
        report_text=event.report_text,
        fips=entry.fips,
        lat=entry.lat,
        lon=entry.lon,
    )


def georeference_all(events: list[RawEvent], gaz: Gazetteer) -> tuple[list[GeoEvent], list[RowError]]:
    """Resolve a batch; unresolvable events are collected, not fatal."""
    out: list[GeoEvent] = []
    errors: list[RowError] = []
    for i, ev in enumerate(events):
        try:
            out.append(georeference(ev, gaz))
        except UnresolvedLocationError as exc:
            errors.append(RowError(i, str(exc)))
    return out, errors


def geoevent_to_json(ev: GeoEvent) -> dict:
    return {
        "id": ev.id,
        "date": ev.date.isoformat(),
        "state": ev.state,
        "county": ev.county_name,
        "address": ev.address,
        "event_type": ev.event_type,
        "report_text": ev.report_text,
        "fips": ev.fips,
        "lat": ev.lat,
        "lon": ev.lon,
    }


def geoevent_from_json(obj: dict) -> GeoEvent:
    return GeoEvent(
        id=obj["id"],
        date=date.fromisoformat(obj["date"]),
        state=obj["state"],
        county_name=obj["county"],
        address=obj.get("address"),
        event_type=obj["event_type"],
        report_text=obj.get("report_text", ""),
        fips=obj["fips"],
        lat=obj["lat"],
        lon=obj["lon"],
    )
