"""Numerical evidence for positive definiteness on spheres and spheres x time.

An isotropic covariance on the ``d``-sphere is positive definite exactly when
its Gegenbauer (Schoenberg) expansion has positive semidefinite coefficient
matrices.  The coefficients are computed here by Gauss-Legendre quadrature and
truncated at degree ``N``, so a report can refute validity (a clearly negative
coefficient) or support it, never prove it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

from .geometry import EARTH_RADIUS_KM
from .specfun import gegenbauer_all

log = logging.getLogger(__name__)

DEFAULT_N = 50
DEFAULT_NODES = 512
DEFAULT_LAGS = 64
TAIL_WARNING = 1e-4
NEG_TOL = 1e-6
QUAD_TOL = 1e-8
PSD_TOL = 1e-8


@dataclass
class SchoenbergReport:
    d: int
    coefficients: np.ndarray
    truncation: int
    nodes: int
    min_diagonal: float
    min_eigenvalue: float
    tail_mass: np.ndarray
    quadrature_change: float
    quadrature_converged: bool
    lags: np.ndarray | None = None
    temporal_min_eigenvalues: np.ndarray | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        if self.min_eigenvalue < -NEG_TOL:
            return "refuted"
        if self.temporal_min_eigenvalues is not None and np.any(self.temporal_min_eigenvalues < -NEG_TOL):
            return "refuted"
        return "supported"

    def summary(self) -> dict:
        out = {
            "d": self.d,
            "truncation": self.truncation,
            "nodes": self.nodes,
            "verdict": self.verdict,
            "min_diagonal": self.min_diagonal,
            "min_eigenvalue": self.min_eigenvalue,
            "max_tail_mass": float(np.max(self.tail_mass)),
            "quadrature_change": self.quadrature_change,
            "quadrature_converged": self.quadrature_converged,
            "notes": list(self.notes),
        }
        if self.temporal_min_eigenvalues is not None:
            out["temporal_min_eigenvalue"] = float(np.min(self.temporal_min_eigenvalues))
        return out


@lru_cache(maxsize=16)
def _nodes(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to ``[0, pi]`` (read-only, cached)."""
    x, w = roots_legendre(nodes)
    theta, weight = 0.5 * math.pi * (x + 1.0), 0.5 * math.pi * w
    theta.flags.writeable = False
    weight.flags.writeable = False
    return theta, weight


def _projection_weights(d: int, N: int, theta: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Matrix ``P[n, k]`` so that ``B_n = sum_k P[n, k] psi(theta_k)``."""
    if d < 1:
        raise ValueError("sphere dimension d must be >= 1")
    n = np.arange(N + 1)
    if d == 1:
        factor = np.where(n == 0, 1.0 / math.pi, 2.0 / math.pi)
        basis = np.cos(np.outer(n, theta))
        return factor[:, None] * basis * w[None, :]
    lam = 0.5 * (d - 1)
    const = math.exp(2 * math.lgamma(lam) - math.lgamma(d - 1)) / (2.0 ** (3 - d) * math.pi)
    factor = (2 * n + d - 1) * const
    basis = gegenbauer_all(N, lam, np.cos(theta))
    return factor[:, None] * basis * (np.sin(theta) ** (d - 1) * w)[None, :]


def _as_matrix_samples(values: np.ndarray, npts: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1 or values.shape == (npts,):
        return values.reshape(npts, 1, 1)
    return values


def _project(psi: Callable, d: int, N: int, nodes: int) -> np.ndarray:
    theta, w = _nodes(nodes)
    vals = _as_matrix_samples(psi(theta), nodes)
    if not np.all(np.isfinite(vals)):
        raise ValueError("psi returned non-finite values")
    return np.einsum("nk,k...->n...", _projection_weights(d, N, theta, w), vals)


def schoenberg_matrices(psi: Callable, d: int, N: int = DEFAULT_N, nodes: int = DEFAULT_NODES,
                        quad_tol: float = QUAD_TOL) -> SchoenbergReport:
    """Schoenberg coefficient matrices ``B_{n,d}``, ``n = 0..N``, of ``psi`` on ``[0, pi]``.

    ``psi`` maps an array of angles (radians) to values of shape ``(K,)`` or
    ``(K, m, m)``.  The quadrature is repeated with twice the nodes and the
    largest coefficient change is reported; a change above ``quad_tol`` marks
    the report as not converged.
    """
    coeffs = _project(psi, d, N, nodes)
    fine = _project(psi, d, N, 2 * nodes)
    change = float(np.max(np.abs(fine - coeffs)))
    converged = change <= quad_tol
    psi0 = _as_matrix_samples(psi(np.zeros(1)), 1)[0]
    tail = np.abs(psi0 - coeffs.sum(axis=0))
    diag = np.diagonal(coeffs, axis1=1, axis2=2)
    eig = np.linalg.eigvalsh(0.5 * (coeffs + np.swapaxes(coeffs, 1, 2)))
    notes = []
    if not converged:
        notes.append(f"quadrature not converged: doubling nodes changed coefficients by {change:.3g}")
    if np.max(tail) > TAIL_WARNING:
        notes.append(f"tail mass {np.max(tail):.3g} beyond degree {N}; increase N for a firmer verdict")
    for note in notes:
        log.warning(note)
    return SchoenbergReport(
        d=d, coefficients=coeffs, truncation=N, nodes=nodes,
        min_diagonal=float(diag.min()), min_eigenvalue=float(eig.min()), tail_mass=tail,
        quadrature_change=change, quadrature_converged=converged, notes=notes)


def _block_toeplitz(phi: np.ndarray) -> np.ndarray:
    """Symmetric block Toeplitz matrix from ``phi[l] = phi(l * step)`` of shape ``(L, m, m)``."""
    L, m, _ = phi.shape
    idx = np.abs(np.arange(L)[:, None] - np.arange(L)[None, :])
    blocks = phi[idx]  # (L, L, m, m)
    return blocks.transpose(0, 2, 1, 3).reshape(L * m, L * m)


def schoenberg_functions(cov: Callable, d: int, N: int = DEFAULT_N, nodes: int = DEFAULT_NODES,
                         lags: int = DEFAULT_LAGS, lag_step: float = 1.0,
                         quad_tol: float = QUAD_TOL) -> SchoenbergReport:
    """Schoenberg functions ``phi_{n,d}(u)`` of a space-time covariance on a lag grid.

    ``cov(theta, u)`` takes an angle array of shape ``(K, 1)`` and a lag array of
    shape ``(1, L)`` and returns ``(K, L)`` or ``(K, L, m, m)``.  Each degree
    ``n`` must be a positive definite function of the lag; this is checked by
    the smallest eigenvalue of its block Toeplitz matrix on the uniform grid
    ``u = 0, step, ..., (lags - 1) step``.
    """
    u = lag_step * np.arange(lags)

    def project(k: int) -> np.ndarray:
        theta, w = _nodes(k)
        vals = np.asarray(cov(theta[:, None], u[None, :]), dtype=float)
        if vals.ndim == 2:
            vals = vals[..., None, None]
        return np.einsum("nk,kl...->nl...", _projection_weights(d, N, theta, w), vals)

    coeffs = project(nodes)
    change = float(np.max(np.abs(project(2 * nodes) - coeffs)))
    converged = change <= quad_tol
    c0 = np.asarray(cov(np.zeros((1, 1)), np.zeros((1, 1))), dtype=float).reshape(coeffs.shape[-2:])
    tail = np.abs(c0 - coeffs[:, 0].sum(axis=0))
    at_zero = coeffs[:, 0]
    diag = np.diagonal(at_zero, axis1=1, axis2=2)
    eig0 = np.linalg.eigvalsh(0.5 * (at_zero + np.swapaxes(at_zero, 1, 2)))
    temporal = np.array([np.linalg.eigvalsh(_block_toeplitz(coeffs[n])).min() for n in range(N + 1)])
    notes = []
    if not converged:
        notes.append(f"quadrature not converged: doubling nodes changed coefficients by {change:.3g}")
    if np.max(tail) > TAIL_WARNING:
        notes.append(f"tail mass {np.max(tail):.3g} beyond degree {N}; increase N for a firmer verdict")
    for note in notes:
        log.warning(note)
    return SchoenbergReport(
        d=d, coefficients=coeffs, truncation=N, nodes=nodes,
        min_diagonal=float(diag.min()), min_eigenvalue=float(eig0.min()), tail_mass=tail,
        quadrature_change=change, quadrature_converged=converged, lags=u,
        temporal_min_eigenvalues=temporal, notes=notes)


def model_spatial_function(model, lag: float = 0.0, radius_km: float = EARTH_RADIUS_KM) -> Callable:
    """``theta -> C(radius_km * theta, lag)`` as ``(K, m, m)`` samples for :func:`schoenberg_matrices`."""
    m = model.m
    i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")

    def psi(theta):
        theta = np.asarray(theta, dtype=float)[:, None, None]
        return model.cov(i[None], j[None], radius_km * theta, np.full(theta.shape, lag))

    return psi


def model_space_time_function(model, radius_km: float = EARTH_RADIUS_KM) -> Callable:
    """``(theta, u) -> C(radius_km * theta, u)`` for :func:`schoenberg_functions`."""
    m = model.m
    i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")

    def cov(theta, u):
        theta, u = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(u, dtype=float))
        th = radius_km * theta[..., None, None]
        uu = u[..., None, None]
        return model.cov(i, j, th, uu)

    return cov


@dataclass(frozen=True)
class EigenCheck:
    lambda_min: float
    lambda_max: float
    psd: bool


def min_eigen_check(M, tol: float = PSD_TOL) -> EigenCheck:
    """Extreme eigenvalues of a symmetric matrix (LAPACK ``syevd`` via ``eigvalsh``).

    ``psd`` holds when ``lambda_min >= -tol * lambda_max``.
    """
    A = np.asarray(getattr(M, "values", M), dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if asym > 1e-10 * max(1.0, float(np.max(np.abs(A)))):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    ev = np.linalg.eigvalsh(A)
    lo, hi = float(ev[0]), float(ev[-1])
    return EigenCheck(lo, hi, lo >= -tol * max(hi, 0.0))
