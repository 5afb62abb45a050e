import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spherecov.geometry import (
    EARTH_RADIUS_KM,
    SpaceTimeLocation,
    SpherePoint,
    angle_between,
    geodesic_angle,
    geodesic_km,
    pairwise_angles,
    unit_vectors,
)

lons = st.floats(-180, 180, allow_nan=False)
lats = st.floats(-90, 90, allow_nan=False)
points = st.builds(SpherePoint, lons, lats)


def test_identical_points_have_zero_angle():
    p = SpherePoint(37.2, -12.5)
    assert geodesic_angle(p, p) == 0.0


def test_antipodal_and_quarter_circle():
    a = SpherePoint(0, 0)
    assert geodesic_angle(a, SpherePoint(180, 0)) == pytest.approx(math.pi, abs=1e-15)
    assert geodesic_angle(a, SpherePoint(90, 0)) == pytest.approx(math.pi / 2, abs=1e-15)


def test_km_conversion():
    # 0.2 rad on the Earth sphere is the pairwise cutoff used for fitting
    a = SpherePoint(0, 0)
    b = SpherePoint(math.degrees(0.2), 0)
    assert geodesic_km(a, b) == pytest.approx(1275.6, abs=1e-9)
    assert geodesic_km(a, a) == 0.0
    assert geodesic_km(a, SpherePoint(180, 0), radius_km=1.0) == pytest.approx(math.pi)
    assert EARTH_RADIUS_KM == 6378.0


@pytest.mark.parametrize("radius", [0.0, -1.0])
def test_nonpositive_radius_rejected(radius):
    with pytest.raises(ValueError):
        geodesic_km(SpherePoint(0, 0), SpherePoint(1, 1), radius_km=radius)


@pytest.mark.parametrize("lon,lat", [(0, 91), (0, -90.5), (181, 0), (float("nan"), 0)])
def test_invalid_points_rejected(lon, lat):
    with pytest.raises(ValueError):
        SpherePoint(lon, lat)


def test_pole_longitude_normalized():
    assert SpherePoint(123.0, 90).lon == 0.0
    assert SpherePoint(-45.0, -90).lon == 0.0
    assert geodesic_angle(SpherePoint(10, 90), SpherePoint(-170, 90)) == 0.0


def test_space_time_location_requires_finite_time():
    with pytest.raises(ValueError):
        SpaceTimeLocation(SpherePoint(0, 0), float("inf"))


@given(points, points)
def test_symmetry_is_exact(a, b):
    assert geodesic_angle(a, b) == geodesic_angle(b, a)
    assert 0.0 <= geodesic_angle(a, b) <= math.pi


@settings(max_examples=300)
@given(points, points, points)
def test_triangle_inequality(a, b, c):
    assert geodesic_angle(a, c) <= geodesic_angle(a, b) + geodesic_angle(b, c) + 1e-10


def test_agrees_with_arccos_away_from_endpoints(rng):
    lon = rng.uniform(-180, 180, size=(2000, 2))
    lat = np.degrees(np.arcsin(rng.uniform(-1, 1, size=(2000, 2))))
    x = unit_vectors(lon[:, 0], lat[:, 0])
    y = unit_vectors(lon[:, 1], lat[:, 1])
    dot = np.einsum("ij,ij->i", x, y)
    keep = np.abs(dot) < 0.999
    assert keep.sum() >= 1000
    naive = np.arccos(dot[keep])
    assert np.max(np.abs(naive - angle_between(x[keep], y[keep]))) <= 1e-7


def test_stable_near_zero_angle():
    # arccos of the dot product loses everything below ~1e-8 rad; atan2 does not
    a = SpherePoint(10.0, 20.0)
    b = SpherePoint(10.0, 20.0 + 1e-9)
    assert geodesic_angle(a, b) == pytest.approx(math.radians(1e-9), rel=1e-6)


def test_pairwise_angles_matches_scalar(rng):
    lon = rng.uniform(-180, 180, 7)
    lat = rng.uniform(-80, 80, 7)
    xyz = unit_vectors(lon, lat)
    A = pairwise_angles(xyz)
    assert np.array_equal(A, A.T) or np.max(np.abs(A - A.T)) < 1e-15
    for i in range(7):
        for j in range(7):
            assert A[i, j] == pytest.approx(geodesic_angle(SpherePoint(lon[i], lat[i]),
                                                           SpherePoint(lon[j], lat[j])), abs=1e-14)


def test_from_vector_roundtrip():
    p = SpherePoint(-73.5, 41.2)
    q = SpherePoint.from_vector(p.vector)
    assert q.lon == pytest.approx(p.lon) and q.lat == pytest.approx(p.lat)
