"""Long-format multivariate space-time observations and their CSV form.

The CSV header is ``lon,lat,time,var,value`` with 1-based variable ids; lines
starting with ``#`` are comments (used for provenance headers).  In memory the
variable index is 0-based.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import EARTH_RADIUS_KM

HEADER = ("lon", "lat", "time", "var", "value")


class DataError(ValueError):
    pass


@dataclass
class Dataset:
    lon: np.ndarray
    lat: np.ndarray
    time: np.ndarray
    var: np.ndarray
    value: np.ndarray
    m: int | None = None
    units: str | None = None
    radius_km: float = EARTH_RADIUS_KM
    removed_means: list[float] | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lon = np.asarray(self.lon, dtype=float)
        self.lat = np.asarray(self.lat, dtype=float)
        self.time = np.asarray(self.time, dtype=float)
        self.var = np.asarray(self.var, dtype=int)
        self.value = np.asarray(self.value, dtype=float)
        n = self.value.shape[0]
        if any(a.shape != (n,) for a in (self.lon, self.lat, self.time, self.var)):
            raise DataError("all columns must have the same length")
        if self.m is None:
            self.m = int(self.var.max()) + 1 if n else 1
        if self.m < 1 or np.any((self.var < 0) | (self.var >= self.m)):
            raise DataError(f"variable indices must lie in 0..{self.m - 1}")
        for name in ("lon", "lat", "time", "value"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DataError(f"non-finite entries in column {name!r}")
        if np.any(np.abs(self.lat) > 90):
            raise DataError("latitudes must lie in [-90, 90]")

    def __len__(self) -> int:
        return self.value.shape[0]

    @property
    def coords(self) -> np.ndarray:
        return np.column_stack([self.lon, self.lat, self.time])

    @classmethod
    def from_arrays(cls, coords, var, value, **kwargs) -> "Dataset":
        coords = np.asarray(coords, dtype=float)
        return cls(coords[:, 0], coords[:, 1], coords[:, 2], var, value, **kwargs)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.lon[idx], self.lat[idx], self.time[idx], self.var[idx], self.value[idx],
                       m=self.m, units=self.units, radius_km=self.radius_km)

    def duplicate_keys(self) -> list[tuple]:
        keys = {}
        dups = []
        for row in zip(self.lon, self.lat, self.time, self.var):
            if row in keys:
                dups.append(row)
            keys[row] = True
        return dups

    def demean(self) -> "Dataset":
        """Per-variable mean removal; the removed means are recorded."""
        value = self.value.copy()
        means = []
        for i in range(self.m):
            sel = self.var == i
            mu = float(value[sel].mean()) if sel.any() else 0.0
            value[sel] -= mu
            means.append(mu)
        out = Dataset(self.lon, self.lat, self.time, self.var, value, m=self.m, units=self.units,
                      radius_km=self.radius_km, removed_means=means)
        return out


def _wrap_lon(lon: float, lineno: int) -> float:
    if -180.0 <= lon <= 180.0:
        return lon
    if 180.0 < lon <= 360.0:
        return lon - 360.0
    raise DataError(f"line {lineno}: longitude {lon} outside [-180, 360]")


def load_dataset(path, demean: bool = False, m: int | None = None,
                 radius_km: float = EARTH_RADIUS_KM, units: str | None = None) -> Dataset:
    """Read a long-format CSV, validating every row.

    Malformed rows raise :class:`DataError` naming the line; duplicate
    ``(lon, lat, time, var)`` keys raise naming the key.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    rows = []
    seen: dict[tuple, int] = {}
    with path.open(encoding="utf-8", newline="") as fh:
        lines = ((k, line) for k, line in enumerate(fh, start=1) if line.strip() and not line.startswith("#"))
        header_seen = False
        for lineno, line in lines:
            fields = next(csv.reader(io.StringIO(line)))
            fields = [f.strip() for f in fields]
            if not header_seen:
                if tuple(fields) != HEADER:
                    raise DataError(f"line {lineno}: expected header {','.join(HEADER)}, got {line.strip()!r}")
                header_seen = True
                continue
            if len(fields) != 5:
                raise DataError(f"line {lineno}: expected 5 fields, got {len(fields)}")
            try:
                lon, lat, time, value = (float(fields[k]) for k in (0, 1, 2, 4))
                var = int(fields[3])
            except ValueError as exc:
                raise DataError(f"line {lineno}: {exc}") from None
            if not all(math.isfinite(x) for x in (lon, lat, time, value)):
                raise DataError(f"line {lineno}: non-finite value")
            if not -90.0 <= lat <= 90.0:
                raise DataError(f"line {lineno}: latitude {lat} outside [-90, 90]")
            lon = _wrap_lon(lon, lineno)
            if var < 1 or (m is not None and var > m):
                raise DataError(f"line {lineno}: variable id {var} outside 1..{m or 'm'}")
            key = (lon, lat, time, var)
            if key in seen:
                raise DataError(f"line {lineno}: duplicate observation key lon={lon}, lat={lat}, "
                                f"time={time}, var={var} (first seen on line {seen[key]})")
            seen[key] = lineno
            rows.append((lon, lat, time, var - 1, value))
        if not header_seen:
            raise DataError(f"{path}: empty file")
    if not rows:
        raise DataError(f"{path}: no observations")
    arr = np.array(rows, dtype=float)
    ds = Dataset(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3].astype(int), arr[:, 4],
                 m=m, units=units, radius_km=radius_km)
    return ds.demean() if demean else ds


def format_float(x: float) -> str:
    return repr(float(x))


def write_dataset(path, ds: Dataset, comments: list[str] | None = None, extra: dict | None = None):
    """Write ``ds`` in the long CSV format; ``extra`` adds named columns after ``value``."""
    extra = extra or {}
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        for c in comments or []:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(HEADER) + list(extra))
        cols = [np.asarray(v) for v in extra.values()]
        for k in range(len(ds)):
            row = [format_float(ds.lon[k]), format_float(ds.lat[k]), format_float(ds.time[k]),
                   str(int(ds.var[k]) + 1), format_float(ds.value[k])]
            row += [format_float(c[k]) for c in cols]
            w.writerow(row)
