"""Simple (zero-mean) cokriging, drop-one cross-validation and scoring."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.stats import norm

from .data import Dataset
from .models import DEFAULT_MAX_SIZE, CovarianceModel, assemble_covariance, as_coords, cross_covariance
from .simulate import cholesky_with_jitter

log = logging.getLogger(__name__)

VAR_TOL = 1e-10
DOWNDATE_RATIO = 1e6


def gaussian_crps(mu, sigma, y):
    """CRPS of a normal predictive ``N(mu, sigma**2)`` at outcome ``y``.

    ``sigma * (z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi))`` with
    ``z = (y - mu) / sigma``; ``|y - mu|`` when ``sigma = 0``.
    """
    mu, sigma, y = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (mu, sigma, y)))
    shape = mu.shape
    mu, sigma, y = (np.atleast_1d(a) for a in (mu, sigma, y))
    if np.any(sigma < 0):
        raise ValueError("sigma must be nonnegative")
    out = np.abs(y - mu)
    pos = sigma > 0
    if np.any(pos):
        s = sigma[pos]
        z = (y[pos] - mu[pos]) / s
        out[pos] = s * (z * (2.0 * norm.cdf(z) - 1.0) + 2.0 * norm.pdf(z) - 1.0 / math.sqrt(math.pi))
    return out.reshape(shape) if shape else float(out[0])


@dataclass
class Prediction:
    mean: np.ndarray
    variance: np.ndarray
    coords: np.ndarray
    var: np.ndarray


def _clamp_variance(v: np.ndarray, prior: np.ndarray) -> np.ndarray:
    tol = VAR_TOL * np.maximum(1.0, prior)
    if np.any(v < -tol):
        raise ArithmeticError(f"negative kriging variance {v.min():.3g}")
    small = v < 0
    if np.any(small):
        log.debug("clamped %d slightly negative kriging variances to 0", int(small.sum()))
    return np.where(small, 0.0, v)


class CokrigingSystem:
    """Simple cokriging from a fixed set of observations.

    The observation covariance is factorised once; each target needs only a
    cross-covariance vector and two triangular solves.
    """

    def __init__(self, ds: Dataset, model: CovarianceModel, max_size: int = DEFAULT_MAX_SIZE):
        if len(ds) == 0:
            raise ValueError("empty dataset")
        self.ds = ds
        self.model = model
        self.sigma = assemble_covariance(ds.coords, ds.var, model, radius_km=ds.radius_km,
                                         max_size=max_size).values
        chol = cholesky_with_jitter(self.sigma)
        self.L, self.jitter = chol.L, chol.jitter
        self.alpha = cho_solve((self.L, True), ds.value)

    def predict(self, coords, var) -> Prediction:
        coords = as_coords(coords)
        var = np.atleast_1d(np.asarray(var, dtype=int))
        c = cross_covariance(coords, var, self.ds.coords, self.ds.var, self.model, self.ds.radius_km)
        mean = c @ self.alpha
        w = solve_triangular(self.L, c.T, lower=True)
        prior = self.model.variances()[var]
        variance = _clamp_variance(prior - np.einsum("ij,ij->j", w, w), prior)
        return Prediction(mean, variance, coords, var)


def cokrige(ds: Dataset, model: CovarianceModel, target_coords, target_var) -> Prediction:
    """Simple cokriging mean ``c' S^-1 z`` and variance ``C_vv(0,0) - c' S^-1 c`` at the targets."""
    return CokrigingSystem(ds, model).predict(target_coords, target_var)


@dataclass
class ScoreTable:
    mse: np.ndarray
    crps: np.ndarray
    counts: np.ndarray
    log_cl: float | None = None
    fallbacks: int = 0

    def row(self) -> dict:
        out = {}
        if self.log_cl is not None:
            out["log_cl"] = self.log_cl
        for k, v in enumerate(self.mse, start=1):
            out[f"MSE_{k}"] = float(v)
        for k, v in enumerate(self.crps, start=1):
            out[f"CRPS_{k}"] = float(v)
        return out

    def to_dict(self) -> dict:
        return {**self.row(), "counts": self.counts.tolist(), "fallback_refactorizations": self.fallbacks}


@dataclass
class DropOneResult:
    mean: np.ndarray
    variance: np.ndarray
    scores: ScoreTable


def drop_one_cv(ds: Dataset, model: CovarianceModel, log_cl: float | None = None,
                max_size: int = DEFAULT_MAX_SIZE) -> DropOneResult:
    """Predict every observation from all the others and score per variable.

    Uses one factorisation of the full covariance: with ``Q = S^-1``, removing
    row ``k`` gives mean ``z_k - (Q z)_k / Q_kk`` and variance ``1 / Q_kk``.
    When ``Q_kk S_kk`` exceeds ``1e6`` (the row is nearly determined by the
    others, so the downdate loses accuracy) the prediction is recomputed by
    refactorising without row ``k``.
    """
    system = CokrigingSystem(ds, model, max_size=max_size)
    n = len(ds)
    Q = cho_solve((system.L, True), np.eye(n))
    qdiag = np.diag(Q).copy()
    mean = ds.value - system.alpha / qdiag
    variance = 1.0 / qdiag
    prior = np.diag(system.sigma)
    refactor = qdiag * prior > DOWNDATE_RATIO
    idx = np.arange(n)
    for k in np.flatnonzero(refactor):
        rest = idx != k
        pred = CokrigingSystem(ds.subset(rest), model, max_size=max_size).predict(
            ds.coords[k:k + 1], ds.var[k:k + 1])
        mean[k], variance[k] = pred.mean[0], pred.variance[0]
    variance = _clamp_variance(variance, prior)
    err = ds.value - mean
    crps = gaussian_crps(mean, np.sqrt(variance), ds.value)
    mse = np.zeros(ds.m)
    cr = np.zeros(ds.m)
    counts = np.zeros(ds.m, dtype=int)
    for v in range(ds.m):
        sel = ds.var == v
        counts[v] = int(sel.sum())
        if counts[v]:
            mse[v] = float(np.mean(err[sel] ** 2))
            cr[v] = float(np.mean(crps[sel]))
    scores = ScoreTable(mse, cr, counts, log_cl, int(refactor.sum()))
    return DropOneResult(mean, variance, scores)
