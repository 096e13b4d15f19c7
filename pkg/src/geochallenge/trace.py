"""Trace pipeline: raw timestamped fixes -> dwells -> unique, non-predictable
logged locations.

The stages are pure functions and compose deterministically:

    fixes = ingest_trace(data, "csv")
    dwells = detect_dwells(fixes, params.dwell_radius_m, params.dwell_min_duration_s)
    locations = select_unique(dwells, params.uniqueness_radius_m)
    eligible = filter_predictable(locations, params.max_dwell_s)

`run_pipeline` wraps the four stages and reports per-stage counts.
"""

from __future__ import annotations

import csv
import io
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Iterable, Sequence

from .errors import TraceParseError
from .geo import GeoPoint, haversine_distance

TRACE_CSV_COLUMNS = ("timestamp", "lat", "lon")


@dataclass(frozen=True, slots=True)
class LocationFix:
    """One raw location sample: UTC timestamp (seconds precision), point,
    optional reported accuracy."""

    timestamp: datetime
    point: GeoPoint
    accuracy_m: float | None = None


@dataclass(frozen=True, slots=True)
class DwellEvent:
    """A maximal contiguous stay: every member fix lies within the dwell
    radius of the running centroid and the span meets the minimum duration."""

    start: datetime
    end: datetime
    centroid: GeoPoint
    fix_count: int

    @property
    def duration_s(self) -> int:
        return int((self.end - self.start).total_seconds())


@dataclass(frozen=True, slots=True)
class LoggedLocation:
    """A unique queryable location. `cumulative_dwell_s` accumulates the
    durations of every dwell that folded into this location."""

    id: str
    point: GeoPoint
    logged_at: datetime
    cumulative_dwell_s: int


@dataclass(frozen=True)
class PipelineParams:
    """Thresholds for the pipeline stages, defaulting to the deployed values:
    200 m dwell radius (matches the answer margin), 5 min minimum dwell,
    400 m uniqueness separation, 5 h predictability cutoff, 2.5 min
    sampling cadence (a gap over twice the cadence closes a dwell run)."""

    dwell_radius_m: float = 200.0
    dwell_min_duration_s: int = 300
    uniqueness_radius_m: float = 400.0
    max_dwell_s: int = 18_000
    sample_interval_s: int = 150

    @property
    def max_gap_s(self) -> int:
        return 2 * self.sample_interval_s


@dataclass(frozen=True)
class PipelineResult:
    fixes_in: int
    dwells: tuple[DwellEvent, ...]
    locations: tuple[LoggedLocation, ...]
    eligible: tuple[LoggedLocation, ...]


def parse_timestamp(raw: str) -> datetime:
    """Parse an ISO-8601 UTC timestamp; naive values are taken as UTC.
    Sub-second precision is truncated."""

    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def _finish(fixes: list[LocationFix]) -> list[LocationFix]:
    """Sort by timestamp, drop exact duplicates, and enforce strictly
    increasing timestamps (first fix wins a timestamp collision)."""

    fixes.sort(key=lambda f: f.timestamp)
    out: list[LocationFix] = []
    for fix in fixes:
        if out and fix.timestamp == out[-1].timestamp:
            continue
        out.append(fix)
    return out


def parse_trace_csv(text: str) -> list[LocationFix]:
    """Parse the trace CSV format: header `timestamp,lat,lon[,accuracy_m]`.

    Raises TraceParseError naming the 1-based data row on any malformed or
    out-of-range value. An empty file (header only) yields an empty list.
    """

    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    fieldnames = [name.strip() for name in reader.fieldnames]
    missing = [col for col in TRACE_CSV_COLUMNS if col not in fieldnames]
    if missing:
        raise TraceParseError(f"missing required column(s): {', '.join(missing)}")

    fixes: list[LocationFix] = []
    for row_no, row in enumerate(reader, start=1):
        try:
            ts = parse_timestamp(row["timestamp"])
            lat = float(row["lat"])
            lon = float(row["lon"])
            raw_acc = (row.get("accuracy_m") or "").strip()
            acc = float(raw_acc) if raw_acc else None
            if acc is not None and (not math.isfinite(acc) or acc < 0):
                raise ValueError(f"accuracy {acc} must be a non-negative number")
            point = GeoPoint(lat, lon)
        except TraceParseError:
            raise
        except (KeyError, TypeError) as exc:
            raise TraceParseError(f"missing value ({exc})", row=row_no) from exc
        except ValueError as exc:
            raise TraceParseError(str(exc), row=row_no) from exc
        fixes.append(LocationFix(ts, point, acc))
    return _finish(fixes)


def parse_trace_gpx(text: str) -> list[LocationFix]:
    """Parse GPX 1.1 track points (trkpt lat/lon attributes + time child)."""

    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise TraceParseError(f"invalid GPX XML: {exc}") from exc

    fixes: list[LocationFix] = []
    count = 0
    for elem in root.iter():
        if not elem.tag.endswith("trkpt"):
            continue
        count += 1
        time_text = None
        for child in elem:
            if child.tag.endswith("time"):
                time_text = child.text
                break
        try:
            if time_text is None:
                raise ValueError("trkpt has no <time> child")
            ts = parse_timestamp(time_text)
            point = GeoPoint(float(elem.get("lat", "")), float(elem.get("lon", "")))
        except ValueError as exc:
            raise TraceParseError(str(exc), row=count) from exc
        fixes.append(LocationFix(ts, point))
    return _finish(fixes)


def sniff_format(data: str) -> str:
    """Guess "gpx" or "csv" from content (GPX starts with an XML tag)."""

    return "gpx" if data.lstrip()[:1] == "<" else "csv"


def ingest_trace(source: bytes | str, fmt: str | None = None) -> list[LocationFix]:
    """Decode and parse a raw trace. `fmt` is "csv", "gpx", or None to sniff."""

    text = source.decode("utf-8") if isinstance(source, bytes) else source
    fmt = fmt or sniff_format(text)
    if fmt == "csv":
        return parse_trace_csv(text)
    if fmt == "gpx":
        return parse_trace_gpx(text)
    raise TraceParseError(f"unknown trace format {fmt!r}")


class _RunningCentroid:
    """Incremental mean of fix coordinates. Longitudes are unwrapped
    relative to the first fix so dwells straddling the antimeridian
    average correctly."""

    def __init__(self, first: GeoPoint):
        self.ref_lon = first.longitude_deg
        self.lat_sum = first.latitude_deg
        self.lon_sum = 0.0
        self.count = 1

    def add(self, p: GeoPoint) -> None:
        self.lat_sum += p.latitude_deg
        self.lon_sum += (p.longitude_deg - self.ref_lon + 180.0) % 360.0 - 180.0
        self.count += 1

    def point(self) -> GeoPoint:
        return GeoPoint(
            self.lat_sum / self.count, self.ref_lon + self.lon_sum / self.count
        )


def detect_dwells(
    fixes: Sequence[LocationFix],
    dwell_radius_m: float = 200.0,
    dwell_min_duration_s: int = 300,
    max_gap_s: int = 300,
) -> list[DwellEvent]:
    """Extract maximal stays from a time-ordered fix list.

    A fix joins the current run if it arrives within `max_gap_s` of the
    previous fix and lies within `dwell_radius_m` of the running centroid;
    otherwise the run is closed (emitted if its span reaches
    `dwell_min_duration_s`) and a new run starts at the fix. A gap closes
    the run so missing data never fabricates a long stay.
    """

    dwells: list[DwellEvent] = []
    run: list[LocationFix] = []
    centroid: _RunningCentroid | None = None

    def close_run() -> None:
        if not run:
            return
        span = (run[-1].timestamp - run[0].timestamp).total_seconds()
        if span >= dwell_min_duration_s:
            dwells.append(
                DwellEvent(
                    start=run[0].timestamp,
                    end=run[-1].timestamp,
                    centroid=centroid.point(),
                    fix_count=len(run),
                )
            )

    for fix in fixes:
        if run:
            gap = (fix.timestamp - run[-1].timestamp).total_seconds()
            if gap <= max_gap_s and haversine_distance(fix.point, centroid.point()) <= dwell_radius_m:
                run.append(fix)
                centroid.add(fix.point)
                continue
            close_run()
        run = [fix]
        centroid = _RunningCentroid(fix.point)
    close_run()
    return dwells


def select_unique(
    dwells: Sequence[DwellEvent],
    uniqueness_radius_m: float = 400.0,
    existing: Sequence[LoggedLocation] = (),
) -> list[LoggedLocation]:
    """Greedy chronological uniqueness scan.

    A dwell becomes a new logged location iff its centroid is at least
    `uniqueness_radius_m` from every location logged so far; otherwise its
    duration folds into the nearest logged location. `existing` seeds the
    scan (re-enrollment), and the returned list starts with the existing
    locations, durations updated.
    """

    locations: list[LoggedLocation] = list(existing)
    seq = len(locations)
    for dwell in dwells:
        nearest_i = -1
        nearest_d = math.inf
        for i, loc in enumerate(locations):
            d = haversine_distance(dwell.centroid, loc.point)
            if d < nearest_d:
                nearest_i, nearest_d = i, d
        if nearest_d >= uniqueness_radius_m:
            seq += 1
            locations.append(
                LoggedLocation(
                    id=f"L{seq:04d}",
                    point=dwell.centroid,
                    logged_at=dwell.start,
                    cumulative_dwell_s=dwell.duration_s,
                )
            )
        else:
            prev = locations[nearest_i]
            locations[nearest_i] = replace(
                prev, cumulative_dwell_s=prev.cumulative_dwell_s + dwell.duration_s
            )
    return locations


def filter_predictable(
    locations: Iterable[LoggedLocation], max_dwell_s: int = 18_000
) -> list[LoggedLocation]:
    """Drop locations where the user stayed more than `max_dwell_s` in total
    (home, workplace): long-stay spots are easy for an acquaintance to guess.
    Exactly `max_dwell_s` is retained; the rule is strictly "more than".
    """

    return [loc for loc in locations if loc.cumulative_dwell_s <= max_dwell_s]


def run_pipeline(
    fixes: Sequence[LocationFix],
    params: PipelineParams = PipelineParams(),
    existing: Sequence[LoggedLocation] = (),
) -> PipelineResult:
    """Run all stages over an ingested fix list."""

    dwells = detect_dwells(
        fixes,
        dwell_radius_m=params.dwell_radius_m,
        dwell_min_duration_s=params.dwell_min_duration_s,
        max_gap_s=params.max_gap_s,
    )
    locations = select_unique(dwells, params.uniqueness_radius_m, existing=existing)
    eligible = filter_predictable(locations, params.max_dwell_s)
    return PipelineResult(
        fixes_in=len(fixes),
        dwells=tuple(dwells),
        locations=tuple(locations),
        eligible=tuple(eligible),
    )


LOCATION_CSV_HEADER = "id,lat,lon,logged_at,cumulative_dwell_s"


def locations_to_csv(locations: Iterable[LoggedLocation]) -> str:
    """Serialize logged locations to the CSV format the CLI emits.
    Coordinates keep full repr precision so round-trips are exact."""

    lines = [LOCATION_CSV_HEADER]
    for loc in locations:
        ts = loc.logged_at.strftime("%Y-%m-%dT%H:%M:%SZ")
        lines.append(
            f"{loc.id},{loc.point.latitude_deg!r},{loc.point.longitude_deg!r},"
            f"{ts},{loc.cumulative_dwell_s}"
        )
    return "\n".join(lines) + "\n"


def locations_from_csv(text: str) -> list[LoggedLocation]:
    reader = csv.DictReader(io.StringIO(text))
    out: list[LoggedLocation] = []
    for row_no, row in enumerate(reader, start=1):
        try:
            out.append(
                LoggedLocation(
                    id=row["id"],
                    point=GeoPoint(float(row["lat"]), float(row["lon"])),
                    logged_at=parse_timestamp(row["logged_at"]),
                    cumulative_dwell_s=int(row["cumulative_dwell_s"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TraceParseError(str(exc), row=row_no) from exc
    return out
