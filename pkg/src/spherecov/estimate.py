"""Pairwise composite-likelihood estimation with spatial and temporal cutoffs.

Every pair of observations (marginal and cross-variable) closer than
``ds_max_km`` in space and ``dt_max`` in time contributes the exact bivariate
zero-mean Gaussian log density, with equal weights.  The objective is
maximised over unconstrained parameters by the Nelder-Mead simplex
(reflection 1, expansion 2, contraction 0.5, shrink 0.5) with jittered
restarts.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .data import Dataset
from .geometry import pairwise_angles, unit_vectors
from .models import CovarianceModel, ModelA, ModelB, ModelC, ModelD, model_from_dict

log = logging.getLogger(__name__)

PAPER_DS_MAX_KM = 1275.6
PAPER_DT_MAX = 4.0
_PENALTY = 1e300
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class PairIndex:
    a: np.ndarray
    b: np.ndarray
    dist: np.ndarray
    lag: np.ndarray
    i: np.ndarray
    j: np.ndarray
    ds_max_km: float
    dt_max: float

    def __len__(self) -> int:
        return self.a.size


def build_pairs(ds: Dataset, ds_max_km: float = PAPER_DS_MAX_KM, dt_max: float = PAPER_DT_MAX,
                block: int = 512) -> PairIndex:
    """All pairs ``a < b`` with distance ``<= ds_max_km`` and ``|t_a - t_b| <= dt_max``.

    Pairs of rows sharing location, time and variable are excluded.
    """
    if ds_max_km < 0 or dt_max < 0:
        raise ValueError("cutoffs must be nonnegative")
    n = len(ds)
    xyz = unit_vectors(ds.lon, ds.lat)
    parts = []
    for r0 in range(0, n, block):
        r1 = min(n, r0 + block)
        dist = ds.radius_km * pairwise_angles(xyz[r0:r1], xyz)
        lag = ds.time[r0:r1, None] - ds.time[None, :]
        rows = np.arange(r0, r1)[:, None]
        keep = (np.arange(n)[None, :] > rows) & (dist <= ds_max_km) & (np.abs(lag) <= dt_max)
        ra, cb = np.nonzero(keep)
        parts.append((ra + r0, cb, dist[ra, cb], lag[ra, cb]))
    a = np.concatenate([p[0] for p in parts])
    b = np.concatenate([p[1] for p in parts])
    dist = np.concatenate([p[2] for p in parts])
    lag = np.concatenate([p[3] for p in parts])
    i, j = ds.var[a], ds.var[b]
    self_pair = (dist == 0) & (lag == 0) & (i == j)
    keep = ~self_pair
    pairs = PairIndex(a[keep], b[keep], dist[keep], lag[keep], i[keep], j[keep], ds_max_km, dt_max)
    if len(pairs) == 0:
        raise ValueError(f"no observation pairs within {ds_max_km} km and {dt_max} time units; "
                         "increase the cutoffs")
    log.info("built %d pairs (ds_max=%g km, dt_max=%g)", len(pairs), ds_max_km, dt_max)
    return pairs


def cl_pair_terms(ds: Dataset, model: CovarianceModel, pairs: PairIndex) -> np.ndarray:
    """Per-pair bivariate Gaussian log densities; ``-inf`` where the 2x2 block is not PD."""
    var = model.variances()
    va, vb = var[pairs.i], var[pairs.j]
    c = np.asarray(model.cov(pairs.i, pairs.j, pairs.dist, pairs.lag), dtype=float)
    det = va * vb - c * c
    za, zb = ds.value[pairs.a], ds.value[pairs.b]
    ok = det > 1e-14 * va * vb
    safe = np.where(ok, det, 1.0)
    quad = (vb * za * za - 2.0 * c * za * zb + va * zb * zb) / safe
    return np.where(ok, -_LOG_2PI - 0.5 * np.log(safe) - 0.5 * quad, -np.inf)


def cl_objective(ds: Dataset, model: CovarianceModel, pairs: PairIndex) -> float:
    """Pairwise composite log-likelihood (higher is better)."""
    terms = cl_pair_terms(ds, model, pairs)
    bad = int(np.count_nonzero(~np.isfinite(terms)))
    if bad:
        log.debug("%d pairs with non-positive-definite 2x2 covariance", bad)
        return -math.inf
    return float(np.sum(terms))


@dataclass
class FitResult:
    family: str
    params: dict[str, float]
    log_cl: float
    iterations: int
    converged: bool
    n_pairs: int
    ds_max_km: float
    dt_max: float
    initial_log_cl: float
    restarts: list[dict] = field(default_factory=list)
    model: CovarianceModel | None = None

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "params": self.params,
            "derived": self.model.to_dict().get("derived", {}) if self.model is not None else {},
            "log_cl": self.log_cl,
            "initial_log_cl": self.initial_log_cl,
            "iterations": self.iterations,
            "converged": self.converged,
            "n_pairs": self.n_pairs,
            "cutoffs": {"ds_max_km": self.ds_max_km, "dt_max": self.dt_max},
            "restarts": self.restarts,
        }


def empirical_moments(ds: Dataset) -> tuple[np.ndarray, float]:
    """Per-variable empirical variances and the collocated 1-2 correlation."""
    variances = np.array([np.var(ds.value[ds.var == k]) if np.any(ds.var == k) else 1.0
                          for k in range(ds.m)])
    rho = 0.0
    if ds.m >= 2:
        key = {}
        for k in np.flatnonzero(ds.var == 0):
            key[(ds.lon[k], ds.lat[k], ds.time[k])] = ds.value[k]
        x, y = [], []
        for k in np.flatnonzero(ds.var == 1):
            v = key.get((ds.lon[k], ds.lat[k], ds.time[k]))
            if v is not None:
                x.append(v)
                y.append(ds.value[k])
        if len(x) > 2:
            rho = float(np.corrcoef(x, y)[0, 1])
    return variances, rho


def default_init(family: str, ds: Dataset, pairs: PairIndex) -> CovarianceModel:
    """Moment-based starting values: empirical variances and correlation, cutoff-scale quantiles."""
    v, rho = empirical_moments(ds)
    rho = float(np.clip(rho, -0.95, 0.95))
    c_s = float(np.median(pairs.dist[pairs.dist > 0])) if np.any(pairs.dist > 0) else 1.0
    lags = np.abs(pairs.lag[pairs.lag != 0])
    c_t = float(np.median(lags)) if lags.size else 1.0
    if family == "ModelA":
        return ModelA(v[0], v[1], rho, c_s, c_t)
    if family == "ModelB":
        return ModelB(v[0], v[1], rho, c_s, c_t)
    if family == "ModelC":
        return ModelC(v[0], v[1], rho, c_s, c_s, c_t)
    if family == "ModelD":
        zeta = 1.0
        a21 = rho * math.sqrt(v[1] * (1.0 + zeta))
        a22 = math.sqrt(max(v[1] - a21**2, 0.1 * v[1]))
        return ModelD(math.sqrt(v[0]), a21, a22, c_s, c_s, c_t, c_t, zeta)
    raise ValueError(f"no default initialisation for family {family!r}; supply init")


def _initial_simplex(y0: np.ndarray, transforms: list[str]) -> np.ndarray:
    sim = [y0]
    for k, t in enumerate(transforms):
        y = y0.copy()
        if t == "identity":
            y[k] += 0.5 * abs(y0[k]) if y0[k] != 0 else 1e-3
        else:
            y[k] += 0.5
        sim.append(y)
    return np.array(sim)


def fit(ds: Dataset, init: CovarianceModel | dict | str, bounds: dict | None = None,
        ds_max_km: float = PAPER_DS_MAX_KM, dt_max: float = PAPER_DT_MAX, restarts: int = 3,
        seed: int = 0, max_iter: int = 2000, fatol: float = 1e-8, jitter: float = 0.3,
        pairs: PairIndex | None = None) -> FitResult:
    """Maximise the pairwise composite likelihood.

    ``init`` is a model instance, a config dict, or a family name (moment-based
    start).  ``bounds`` maps parameter names to ``(lower, upper)`` and defines
    the transforms.  Restart 0 starts at ``init``; later restarts add Gaussian
    jitter of scale ``jitter`` in the unconstrained space.  The best restart is
    returned, with its Log-CL recomputed from the reported natural parameters.
    """
    if pairs is None:
        pairs = build_pairs(ds, ds_max_km, dt_max)
    if isinstance(init, str):
        init = default_init(init, ds, pairs)
    elif isinstance(init, dict):
        init = model_from_dict(init)
    if not init.PARAMS:
        raise ValueError(f"family {init.family} has no free parameters to fit")
    pv = init.parameter_vector(bounds)
    if not pv.within_bounds():
        raise ValueError("initial parameters violate the bounds")
    transforms = [p.transform for p in pv.params]
    y0 = pv.to_free()

    def model_at(y) -> CovarianceModel | None:
        try:
            return init.with_params(pv.with_free(y).values)
        except (ValueError, OverflowError):
            return None

    def negobj(y):
        model = model_at(y)
        if model is None:
            return _PENALTY
        val = cl_objective(ds, model, pairs)
        return -val if math.isfinite(val) else _PENALTY

    initial = cl_objective(ds, init, pairs)
    rng = np.random.default_rng(seed)
    trace = []
    best = None
    total_iter = 0
    for r in range(max(1, restarts)):
        start = y0.copy()
        if r > 0:
            noise = rng.normal(0.0, jitter, size=y0.size)
            scale = np.where(np.array(transforms) == "identity", np.abs(y0) + 1e-12, 1.0)
            start = y0 + noise * scale
        res = minimize(negobj, start, method="Nelder-Mead",
                       options={"initial_simplex": _initial_simplex(start, transforms),
                                "maxiter": max_iter, "maxfev": 10 * max_iter,
                                "xatol": np.inf, "fatol": fatol, "adaptive": False})
        total_iter += int(res.nit)
        model = model_at(res.x)
        value = cl_objective(ds, model, pairs) if model is not None else -math.inf
        trace.append({"restart": r, "log_cl": value, "iterations": int(res.nit),
                      "success": bool(res.success), "params": model.param_values() if model else None})
        if model is not None and math.isfinite(value) and (best is None or value > best[1]):
            best = (model, value, bool(res.success))
    if best is None or best[1] < initial:
        log.warning("no restart improved on the initial Log-CL; returning the initial parameters")
        return FitResult(init.family, init.param_values(), initial, total_iter, False, len(pairs),
                         pairs.ds_max_km, pairs.dt_max, initial, trace, init)
    model, value, ok = best
    return FitResult(model.family, model.param_values(), value, total_iter, ok and math.isfinite(value),
                     len(pairs), pairs.ds_max_km, pairs.dt_max, initial, trace, model)
