"""Exact simulation of zero-mean Gaussian fields on sphere x time.

Draws are ``z = L eps`` with ``L`` the lower Cholesky factor of the assembled
covariance and ``eps`` standard normal from numpy's PCG64 generator
(``numpy.random.default_rng``).  Replicate ``r`` uses the ``r``-th child of
``SeedSequence(seed)``, so replicates are independent streams and a run is
reproducible from ``seed`` alone.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import EARTH_RADIUS_KM
from .models import DEFAULT_MAX_SIZE, CovarianceModel, assemble_covariance, as_coords

JITTER_STEPS = (1e-12, 1e-10, 1e-8)


class FactorizationError(np.linalg.LinAlgError):
    pass


@dataclass
class CholeskyResult:
    L: np.ndarray
    jitter: float


def cholesky_with_jitter(M) -> CholeskyResult:
    """Lower Cholesky factor, adding ``delta * trace(M) / N`` to the diagonal on failure.

    ``delta`` escalates through 1e-12, 1e-10, 1e-8; the applied jitter (0 if
    none) is returned alongside the factor.
    """
    A = np.asarray(getattr(M, "values", M), dtype=float)
    try:
        return CholeskyResult(np.linalg.cholesky(A), 0.0)
    except np.linalg.LinAlgError:
        pass
    n = A.shape[0]
    scale = np.trace(A) / n
    for delta in JITTER_STEPS:
        jitter = delta * scale
        try:
            return CholeskyResult(np.linalg.cholesky(A + jitter * np.eye(n)), jitter)
        except np.linalg.LinAlgError:
            continue
    lam = float(np.linalg.eigvalsh(A)[0])
    raise FactorizationError(f"Cholesky failed even with jitter {JITTER_STEPS[-1]:g} x mean variance; "
                             f"min eigenvalue {lam:.6g}")


@dataclass
class Realization:
    coords: np.ndarray
    var: np.ndarray
    values: np.ndarray
    seed: int
    replicate: int
    model: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.values) != len(self.var):
            raise ValueError("one value per design row is required")


def simulate(model: CovarianceModel, coords, var, seed: int, n_reps: int = 1,
             radius_km: float = EARTH_RADIUS_KM, max_size: int = DEFAULT_MAX_SIZE) -> list[Realization]:
    """Simulate ``n_reps`` independent realizations of ``model`` at the design rows."""
    coords = as_coords(coords)
    var = np.asarray(var, dtype=int)
    # repeated (location, time, variable) rows share one value: simulate the
    # distinct rows (in first-occurrence order) and copy
    _, first, inverse = np.unique(np.column_stack([coords, var]), axis=0, return_index=True,
                                  return_inverse=True)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    rows = first[order]
    expand = rank[inverse.ravel()]
    cov = assemble_covariance(coords[rows], var[rows], model, radius_km=radius_km, max_size=max_size)
    try:
        chol = cholesky_with_jitter(cov)
    except FactorizationError as exc:
        raise FactorizationError(f"cannot simulate {model.family}: {exc}") from exc
    streams = np.random.SeedSequence(seed).spawn(n_reps)
    out = []
    for r, ss in enumerate(streams):
        eps = np.random.default_rng(ss).standard_normal(rows.size)
        out.append(Realization(coords, var, (chol.L @ eps)[expand], seed, r, model.to_dict()))
    return out


def random_design(n_sites: int, n_times: int, m: int, seed: int,
                  lon_range=(50.0, 150.0), lat_range=(-50.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Sites uniform on a spherical lon/lat box, times ``0..n_times-1``, all variables.

    Rows are ordered by site, then time, then variable.
    """
    rng = np.random.default_rng(seed)
    lon = rng.uniform(*lon_range, size=n_sites)
    s0, s1 = np.sin(np.radians(lat_range))
    lat = np.degrees(np.arcsin(rng.uniform(s0, s1, size=n_sites)))
    site = np.repeat(np.arange(n_sites), n_times * m)
    time = np.tile(np.repeat(np.arange(n_times, dtype=float), m), n_sites)
    var = np.tile(np.arange(m), n_sites * n_times)
    coords = np.column_stack([lon[site], lat[site], time])
    return coords, var
