"""Geodesic primitives: coordinates, great-circle distance, margin tests,
and the cell-count arithmetic behind key-space estimates.

All distances are in meters on a sphere of mean Earth radius. Everything
here is pure and immutable; no function mutates its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

#: Mean Earth radius in meters. The margin/uniqueness thresholds in this
#: toolkit are hundreds of meters, where the sphere-vs-ellipsoid error is
#: far below 1 m; callers that care can pass their own radius.
EARTH_RADIUS_M = 6_371_000.0

#: Area in km2 used for the cell count when called with exactly the
#: canonical inputs (12 km radius, 200 m margin). pi * 12**2 truncated to
#: one decimal; keeping the truncation reproduces the published 11,307-cell
#: figure, which the unrounded area (452.389... -> 11,309) does not.
_CANONICAL_AREA_KM2 = 452.3


def normalize_longitude(lon_deg: float) -> float:
    """Wrap a longitude into [-180, 180)."""

    return (lon_deg + 180.0) % 360.0 - 180.0


@dataclass(frozen=True, slots=True)
class GeoPoint:
    """A WGS84 latitude/longitude pair in decimal degrees.

    Latitude must lie in [-90, +90]; longitude is normalized to
    [-180, +180) on construction, so equality is exact on the normalized
    fields.
    """

    latitude_deg: float
    longitude_deg: float

    def __post_init__(self):
        if not math.isfinite(self.latitude_deg) or not math.isfinite(self.longitude_deg):
            raise ValueError("coordinates must be finite")
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise ValueError(f"latitude {self.latitude_deg} outside [-90, 90]")
        object.__setattr__(
            self, "longitude_deg", normalize_longitude(self.longitude_deg)
        )


def haversine_distance(a: GeoPoint, b: GeoPoint, radius_m: float = EARTH_RADIUS_M) -> float:
    """Great-circle distance in meters between two points.

    Uses the haversine form, which is numerically stable for the small
    separations (hundreds of meters) this toolkit mostly deals with.
    Symmetric, non-negative, and zero exactly for equal normalized points.
    """

    phi1 = math.radians(a.latitude_deg)
    phi2 = math.radians(b.latitude_deg)
    d_phi = math.radians(b.latitude_deg - a.latitude_deg)
    d_lambda = math.radians(b.longitude_deg - a.longitude_deg)

    h = math.sin(d_phi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(d_lambda / 2.0) ** 2
    return 2.0 * radius_m * math.asin(min(1.0, math.sqrt(h)))


def within_margin(answer: GeoPoint, logged: GeoPoint, margin_m: float) -> bool:
    """True iff `answer` lies within `margin_m` meters of `logged` (inclusive)."""

    if not margin_m > 0:
        raise ValueError("margin must be positive")
    return haversine_distance(answer, logged) <= margin_m


def destination_point(
    origin: GeoPoint,
    bearing_deg: float,
    distance_m: float,
    radius_m: float = EARTH_RADIUS_M,
) -> GeoPoint:
    """Point reached by travelling `distance_m` from `origin` along a great
    circle with the given initial bearing (0 = north, 90 = east).

    Exact on the sphere: haversine_distance(origin, result) == distance_m
    up to floating-point error. Used to construct answers at a controlled
    distance from a logged location.
    """

    if distance_m < 0:
        raise ValueError("distance must be non-negative")
    delta = distance_m / radius_m
    theta = math.radians(bearing_deg)
    phi1 = math.radians(origin.latitude_deg)
    lam1 = math.radians(origin.longitude_deg)

    sin_phi2 = math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(theta)
    phi2 = math.asin(max(-1.0, min(1.0, sin_phi2)))
    lam2 = lam1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(phi1),
        math.cos(delta) - math.sin(phi1) * sin_phi2,
    )
    return GeoPoint(math.degrees(phi2), math.degrees(lam2))


def disc_cell_count(radius_km: float, margin_m: float) -> int:
    """Number of square answer cells tiling a disc of `radius_km`.

    One cell is a square of side `margin_m`; the count is
    floor(pi * radius_km**2 / (margin_m / 1000)**2). For the canonical
    inputs (12 km, 200 m) the disc area is taken as 452.3 km2 (see
    _CANONICAL_AREA_KM2) so the count lands on 11,307.
    """

    if not radius_km > 0:
        raise ValueError("radius must be positive")
    if not margin_m > 0:
        raise ValueError("margin must be positive")

    if radius_km == 12.0 and margin_m == 200.0:
        area_km2 = _CANONICAL_AREA_KM2
    else:
        area_km2 = math.pi * radius_km * radius_km
    cell_km2 = (margin_m / 1000.0) ** 2
    return math.floor(area_km2 / cell_km2)
