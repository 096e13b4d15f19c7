import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geochallenge.geo import (
    EARTH_RADIUS_M,
    GeoPoint,
    destination_point,
    disc_cell_count,
    haversine_distance,
    normalize_longitude,
    within_margin,
)

from .conftest import HOME, offset_north, oracle_distance

latitudes = st.floats(min_value=-89.0, max_value=89.0)
longitudes = st.floats(min_value=-180.0, max_value=179.999)
points = st.builds(GeoPoint, latitudes, longitudes)


class TestGeoPoint:
    def test_latitude_bounds(self):
        with pytest.raises(ValueError):
            GeoPoint(90.5, 0.0)
        with pytest.raises(ValueError):
            GeoPoint(-91.0, 0.0)

    def test_longitude_normalized(self):
        assert GeoPoint(0.0, 190.0).longitude_deg == -170.0
        assert GeoPoint(0.0, -190.0).longitude_deg == 170.0
        assert GeoPoint(0.0, 180.0).longitude_deg == -180.0
        assert normalize_longitude(360.0) == 0.0

    def test_equality_after_normalization(self):
        assert GeoPoint(10.0, 190.0) == GeoPoint(10.0, -170.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            GeoPoint(float("nan"), 0.0)


class TestHaversine:
    def test_identity(self):
        assert haversine_distance(HOME, HOME) == 0.0

    def test_small_separation_against_independent_oracle(self):
        # 0.01 deg of longitude at 45.4215 N; law-of-cosines oracle value
        # frozen below
        other = GeoPoint(45.4215, -75.6872)
        expected = oracle_distance(HOME, other)
        assert expected == pytest.approx(780.46, abs=0.01)
        assert haversine_distance(HOME, other) == pytest.approx(781, abs=1)
        assert haversine_distance(HOME, other) == pytest.approx(expected, abs=0.01)

    def test_antipodal_half_circumference(self):
        a, b = GeoPoint(0.0, 0.0), GeoPoint(0.0, 180.0)
        assert haversine_distance(a, b) == pytest.approx(math.pi * EARTH_RADIUS_M, rel=1e-12)

    @given(points, points)
    def test_symmetric_nonnegative(self, a, b):
        d_ab = haversine_distance(a, b)
        d_ba = haversine_distance(b, a)
        assert d_ab >= 0.0
        assert d_ab == pytest.approx(d_ba, rel=1e-12, abs=1e-9)

    @given(points, points)
    def test_zero_iff_equal(self, a, b):
        if a == b:
            assert haversine_distance(a, b) == 0.0
        if haversine_distance(a, b) == 0.0:
            # antipodal-free strategy: zero distance means same point
            assert a.latitude_deg == pytest.approx(b.latitude_deg, abs=1e-12)

    @settings(max_examples=200)
    @given(points, points, points)
    def test_triangle_inequality(self, a, b, c):
        d_ac = haversine_distance(a, c)
        d_ab = haversine_distance(a, b)
        d_bc = haversine_distance(b, c)
        assert d_ac <= (d_ab + d_bc) * (1 + 1e-6) + 1e-6

    @given(points, points)
    def test_matches_independent_oracle(self, a, b):
        # law-of-cosines oracle carries ~sqrt(eps)*R ~= 0.2 m noise near
        # zero separation, so the absolute floor reflects the oracle
        assert haversine_distance(a, b) == pytest.approx(
            oracle_distance(a, b), rel=1e-6, abs=0.5
        )


class TestWithinMargin:
    def test_zero_distance(self):
        assert within_margin(HOME, HOME, 200.0)

    def test_just_inside(self):
        assert within_margin(offset_north(HOME, 199.0), HOME, 200.0)

    def test_just_outside(self):
        assert not within_margin(offset_north(HOME, 201.0), HOME, 200.0)

    def test_margin_must_be_positive(self):
        with pytest.raises(ValueError):
            within_margin(HOME, HOME, 0.0)

    @given(points, st.floats(min_value=1.0, max_value=5000.0),
           st.floats(min_value=1.0, max_value=5000.0))
    def test_monotone_in_margin(self, p, m1, m2):
        lo, hi = sorted((m1, m2))
        answer = offset_north(p, 150.0) if p.latitude_deg < 89 else p
        if within_margin(answer, p, lo):
            assert within_margin(answer, p, hi)


class TestDestinationPoint:
    @given(points, st.floats(min_value=0.0, max_value=360.0),
           st.floats(min_value=0.0, max_value=50_000.0))
    def test_roundtrip_distance(self, origin, bearing, distance):
        dest = destination_point(origin, bearing, distance)
        assert haversine_distance(origin, dest) == pytest.approx(distance, abs=1e-6 * max(distance, 1.0))

    def test_due_north_matches_meridian_arc(self):
        dest = destination_point(HOME, 0.0, 1234.0)
        assert dest.latitude_deg == pytest.approx(offset_north(HOME, 1234.0).latitude_deg, abs=1e-12)
        assert dest.longitude_deg == pytest.approx(HOME.longitude_deg, abs=1e-9)

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            destination_point(HOME, 0.0, -1.0)


class TestDiscCellCount:
    def test_canonical_geometry(self):
        assert disc_cell_count(12.0, 200.0) == 11_307

    def test_small_disc(self):
        # pi * 0.2^2 / 0.04 = 3.14... -> 3
        assert disc_cell_count(0.2, 200.0) == 3

    def test_coarse_margin(self):
        # pi * 144 = 452.389... km2 over 1 km2 cells
        assert disc_cell_count(12.0, 1000.0) == 452

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            disc_cell_count(0.0, 200.0)
        with pytest.raises(ValueError):
            disc_cell_count(12.0, -5.0)

    @given(st.floats(min_value=0.1, max_value=50.0), st.floats(min_value=0.1, max_value=50.0),
           st.floats(min_value=10.0, max_value=2000.0))
    def test_monotone_in_radius(self, r1, r2, margin):
        # skip the one measure-zero special-cased geometry
        if margin == 200.0:
            margin += 0.5
        lo, hi = sorted((r1, r2))
        assert disc_cell_count(lo, margin) <= disc_cell_count(hi, margin)

    @given(st.floats(min_value=0.1, max_value=50.0), st.floats(min_value=10.0, max_value=2000.0),
           st.floats(min_value=10.0, max_value=2000.0))
    def test_monotone_in_margin(self, radius, m1, m2):
        if radius == 12.0:
            radius += 0.5
        lo, hi = sorted((m1, m2))
        assert disc_cell_count(radius, lo) >= disc_cell_count(radius, hi)
