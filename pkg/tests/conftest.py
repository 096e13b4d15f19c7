"""Shared fixtures and independent oracle helpers.

The oracle functions here deliberately use different formulas than the
library (law of cosines instead of haversine; meridian-arc construction
instead of the destination formula) so the tests do not simply re-run the
code under test.
"""

from __future__ import annotations

import math
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from geochallenge.geo import GeoPoint

SPHERE_RADIUS_M = 6_371_000.0
DATA_DIR = Path(__file__).parent / "data"


def oracle_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance via the spherical law of cosines."""

    p1, p2 = math.radians(a.latitude_deg), math.radians(b.latitude_deg)
    dl = math.radians(b.longitude_deg - a.longitude_deg)
    cos_angle = math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2) * math.cos(dl)
    return SPHERE_RADIUS_M * math.acos(max(-1.0, min(1.0, cos_angle)))


def offset_north(origin: GeoPoint, meters: float) -> GeoPoint:
    """Point exactly `meters` due north of origin (meridian arc is exact
    on the sphere, independent of any destination formula)."""

    return GeoPoint(
        origin.latitude_deg + math.degrees(meters / SPHERE_RADIUS_M),
        origin.longitude_deg,
    )


def utc(*args) -> datetime:
    return datetime(*args, tzinfo=timezone.utc)


HOME = GeoPoint(45.4215, -75.6972)


def trace_csv_lines(rows):
    """Build trace CSV text from (iso_ts, lat, lon) tuples."""

    body = "\n".join(f"{ts},{lat!r},{lon!r}" for ts, lat, lon in rows)
    return "timestamp,lat,lon\n" + body + "\n"


def dwell_block(anchor: GeoPoint, start: datetime, fixes: int, interval_s: int = 150):
    """Rows for `fixes` samples sitting exactly on `anchor`."""

    return [
        (
            (start + timedelta(seconds=i * interval_s)).strftime("%Y-%m-%dT%H:%M:%SZ"),
            anchor.latitude_deg,
            anchor.longitude_deg,
        )
        for i in range(fixes)
    ]


@pytest.fixture(scope="session")
def golden_trace_text() -> str:
    return (DATA_DIR / "golden_trace.csv").read_text()


@pytest.fixture(scope="session")
def golden_locations_text() -> str:
    return (DATA_DIR / "golden_locations.csv").read_text()


@pytest.fixture(scope="session")
def study_records_text() -> str:
    """Reference response dataset: 34 legitimate subjects (4 scoring >= 7)
    and 34 paired adversaries (2 scoring >= 7). Fixes the known-adversary
    operating point at t=7 to (fpr 2/34, tpr 4/34)."""

    return (DATA_DIR / "study_records.csv").read_text()
