"""Points on the unit sphere and great-circle distances.

Covariance models consume distances in kilometres on a sphere of radius
``EARTH_RADIUS_KM``; angles in radians are used by the Schoenberg machinery.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

EARTH_RADIUS_KM = 6378.0


@dataclass(frozen=True)
class SpherePoint:
    """A point on the unit sphere given by longitude and latitude in degrees."""

    lon: float
    lat: float

    def __post_init__(self):
        lon, lat = float(self.lon), float(self.lat)
        if not (math.isfinite(lon) and math.isfinite(lat)):
            raise ValueError(f"non-finite coordinates ({lon}, {lat})")
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude {lat} outside [-90, 90]")
        if not -180.0 <= lon <= 180.0:
            raise ValueError(f"longitude {lon} outside [-180, 180]")
        if abs(lat) == 90.0:
            lon = 0.0
        object.__setattr__(self, "lon", lon)
        object.__setattr__(self, "lat", lat)

    @cached_property
    def vector(self) -> np.ndarray:
        return unit_vectors(self.lon, self.lat)

    @classmethod
    def from_vector(cls, v) -> "SpherePoint":
        x, y, z = np.asarray(v, dtype=float) / np.linalg.norm(v)
        lat = math.degrees(math.atan2(z, math.hypot(x, y)))
        lon = math.degrees(math.atan2(y, x))
        return cls(lon, lat)


@dataclass(frozen=True)
class SpaceTimeLocation:
    point: SpherePoint
    time: float

    def __post_init__(self):
        if not math.isfinite(float(self.time)):
            raise ValueError(f"non-finite time {self.time}")


def unit_vectors(lon, lat) -> np.ndarray:
    """Unit 3-vectors for longitude/latitude arrays in degrees, shape ``(..., 3)``."""
    lon = np.radians(np.asarray(lon, dtype=float))
    lat = np.radians(np.asarray(lat, dtype=float))
    clat = np.cos(lat)
    return np.stack([clat * np.cos(lon), clat * np.sin(lon), np.sin(lat)], axis=-1)


def angle_between(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Great-circle angle between unit vectors, broadcasting over leading axes.

    Uses ``atan2(|x cross y|, x . y)``, which keeps full precision near 0 and pi
    where ``arccos`` of the dot product does not.
    """
    cross = np.cross(x, y)
    sin = np.sqrt(np.einsum("...k,...k->...", cross, cross))
    cos = np.einsum("...k,...k->...", x, y)
    return np.clip(np.arctan2(sin, cos), 0.0, math.pi)


def geodesic_angle(a: SpherePoint, b: SpherePoint) -> float:
    """Great-circle angle between two points, in radians within ``[0, pi]``."""
    return float(angle_between(a.vector, b.vector))


def geodesic_km(a: SpherePoint, b: SpherePoint, radius_km: float = EARTH_RADIUS_KM) -> float:
    if not radius_km > 0:
        raise ValueError(f"radius must be positive, got {radius_km}")
    return radius_km * geodesic_angle(a, b)


def pairwise_angles(xa: np.ndarray, xb: np.ndarray | None = None) -> np.ndarray:
    """Matrix of great-circle angles between two sets of unit vectors."""
    if xb is None:
        xb = xa
    return angle_between(xa[:, None, :], xb[None, :, :])
