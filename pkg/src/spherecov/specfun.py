"""Completely monotone and Bernstein function catalogs, Gegenbauer polynomials
and the modified Bessel function of the second kind.

The catalogs are the building blocks of the Gneiting-type covariances: ``g``
is completely monotone on ``[0, inf)`` and ``f`` is a Bernstein function
(positive, increasing, concave, with completely monotone derivative).
Validity is enforced through the catalog parameter restrictions only.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

# Taylor coefficients of 1/Gamma(z) around 0, starting at z**1.
_RGAMMA_COEFFS = (
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.042002635034095235529,
    0.1665386113822914895,
    -0.042197734555544336748,
    -0.0096219715278769735621,
    0.0072189432466630995424,
    -0.0011651675918590651121,
    -0.00021524167411495097282,
    0.00012805028238811618615,
    -0.000020134854780788238656,
    -0.0000012504934821426706573,
    0.0000011330272319816958824,
    -0.00000020563384169776071035,
    6.1160951044814158179e-9,
    5.0020076444692229301e-9,
    -1.1812745704870201446e-9,
    1.0434267116911005105e-10,
    7.782263439905071254e-12,
    -3.6968056186422057082e-12,
    5.100370287454475979e-13,
    -2.0583260535665067832e-14,
    -5.3481225394230179824e-15,
    1.2267786282382607902e-15,
    -1.1812593016974587695e-16,
)

_EPS = 1e-16
_MAX_ITER = 10000


# ---------------------------------------------------------------------------
# Completely monotone functions


CM_FAMILIES = ("PowExp", "Matern", "GenCauchy", "HyperbolicSecantPow")


@dataclass(frozen=True)
class CompletelyMonotoneSpec:
    """A completely monotone function from the catalog.

    ``PowExp``: ``exp(-c t**gamma)``; ``Matern``: normalised
    ``(c sqrt t)**nu K_nu(c sqrt t)``; ``GenCauchy``: ``(1 + c t**gamma)**-nu``;
    ``HyperbolicSecantPow``: ``2**nu (exp(c sqrt t) + exp(-c sqrt t))**-nu``.
    """

    family: str
    c: float
    gamma: float | None = None
    nu: float | None = None

    def __post_init__(self):
        if self.family not in CM_FAMILIES:
            raise ValueError(f"unknown completely monotone family {self.family!r}")
        if not self.c > 0:
            raise ValueError(f"{self.family}: c must be positive, got {self.c}")
        if self.family in ("PowExp", "GenCauchy"):
            if self.gamma is None or not 0 < self.gamma <= 1:
                raise ValueError(f"{self.family}: gamma must lie in (0, 1], got {self.gamma}")
        if self.family in ("Matern", "GenCauchy", "HyperbolicSecantPow"):
            if self.nu is None or not self.nu > 0:
                raise ValueError(f"{self.family}: nu must be positive, got {self.nu}")

    def __call__(self, t):
        return eval_cm(self, t)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "CompletelyMonotoneSpec":
        return cls(**d)


def eval_cm(spec: CompletelyMonotoneSpec, t):
    """Evaluate a completely monotone function at ``t >= 0`` (scalar or array)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("completely monotone functions are evaluated at t >= 0")
    c = spec.c
    if spec.family == "PowExp":
        out = np.exp(-c * t**spec.gamma)
    elif spec.family == "GenCauchy":
        out = (1.0 + c * t**spec.gamma) ** (-spec.nu)
    elif spec.family == "Matern":
        nu = spec.nu
        x = c * np.sqrt(t)
        out = np.ones_like(x)
        pos = x > 0
        if np.any(pos):
            xp = x[pos]
            logk = np.log(bessel_k(nu, xp))
            out[pos] = np.exp(nu * np.log(xp) + logk - (nu - 1) * math.log(2.0) - math.lgamma(nu))
    else:
        # 2**nu (e^x + e^-x)**-nu = cosh(x)**-nu, evaluated through log cosh
        x = c * np.sqrt(t)
        logcosh = x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)
        out = np.exp(-spec.nu * logcosh)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Bernstein functions


BERNSTEIN_FAMILIES = ("PowerPlusOne", "LogForm", "RationalForm")


@dataclass(frozen=True)
class BernsteinSpec:
    """A Bernstein function from the catalog, all normalised so that ``f(0) = 1``.

    ``PowerPlusOne``: ``(a t**alpha + 1)**beta``; ``LogForm``:
    ``log(a t**alpha + b) / log(b)``; ``RationalForm``:
    ``(a t**alpha + b) / (b (a t**alpha + 1))``.
    """

    family: str
    a: float
    alpha: float = 1.0
    beta: float | None = None
    b: float | None = None

    def __post_init__(self):
        if self.family not in BERNSTEIN_FAMILIES:
            raise ValueError(f"unknown Bernstein family {self.family!r}")
        if not self.a > 0:
            raise ValueError(f"{self.family}: a must be positive, got {self.a}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"{self.family}: alpha must lie in (0, 1], got {self.alpha}")
        if self.family == "PowerPlusOne":
            if self.beta is None or not 0 <= self.beta <= 1:
                raise ValueError(f"PowerPlusOne: beta must lie in [0, 1], got {self.beta}")
        elif self.family == "LogForm":
            if self.b is None or not self.b > 1:
                raise ValueError(f"LogForm: b must exceed 1, got {self.b}")
        elif self.b is None or not 0 < self.b <= 1:
            raise ValueError(f"RationalForm: b must lie in (0, 1], got {self.b}")

    @property
    def strictly_increasing(self) -> bool:
        if self.family == "PowerPlusOne":
            return self.beta > 0
        if self.family == "RationalForm":
            return self.b < 1
        return True

    def __call__(self, t):
        return eval_bernstein(self, t)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "BernsteinSpec":
        return cls(**d)


def eval_bernstein(spec: BernsteinSpec, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("Bernstein functions are evaluated at t >= 0")
    s = spec.a * t**spec.alpha
    if spec.family == "PowerPlusOne":
        out = (s + 1.0) ** spec.beta
    elif spec.family == "LogForm":
        out = np.log(s + spec.b) / math.log(spec.b)
    else:
        out = (s + spec.b) / (spec.b * (s + 1.0))
    return out if out.ndim else float(out)


def cm_from_dict(d: dict) -> CompletelyMonotoneSpec:
    return CompletelyMonotoneSpec.from_dict(d)


def bernstein_from_dict(d: dict) -> BernsteinSpec:
    return BernsteinSpec.from_dict(d)


# ---------------------------------------------------------------------------
# Gegenbauer polynomials


def gegenbauer_all(n: int, lam: float, x) -> np.ndarray:
    """Gegenbauer polynomials of degrees ``0..n`` at ``x``, shape ``(n + 1,) + x.shape``.

    ``lam = 0`` is read as the Chebyshev limit, ``cos(k arccos x)``.
    """
    if n < 0:
        raise ValueError("degree must be nonnegative")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + 1e-12):
        raise ValueError("x must lie in [-1, 1]")
    x = np.clip(x, -1.0, 1.0)
    out = np.empty((n + 1,) + x.shape)
    if lam == 0:
        theta = np.arccos(x)
        for k in range(n + 1):
            out[k] = np.cos(k * theta)
        return out
    out[0] = 1.0
    if n >= 1:
        out[1] = 2.0 * lam * x
    for k in range(1, n):
        out[k + 1] = (2.0 * (k + lam) * x * out[k] - (k + 2.0 * lam - 1.0) * out[k - 1]) / (k + 1)
    return out


def gegenbauer(n: int, lam: float, x):
    """Gegenbauer polynomial of degree ``n`` and index ``lam`` at ``x``."""
    out = gegenbauer_all(n, lam, x)[n]
    return out if out.ndim else float(out)


def gegenbauer_at_one(n: int, lam: float) -> float:
    """Value at ``x = 1``: ``Gamma(n + 2 lam) / (n! Gamma(2 lam))``, or 1 when ``lam = 0``."""
    if lam == 0:
        return 1.0
    return math.exp(math.lgamma(n + 2 * lam) - math.lgamma(n + 1) - math.lgamma(2 * lam))


# ---------------------------------------------------------------------------
# Modified Bessel function of the second kind


def _rgamma_pair(mu: float) -> tuple[float, float, float, float]:
    """``gam1, gam2, 1/Gamma(1 + mu), 1/Gamma(1 - mu)`` for ``|mu| <= 1/2``."""
    gampl = gammi = 0.0
    gam1 = gam2 = 0.0
    for k, ck in enumerate(_RGAMMA_COEFFS):
        p = mu**k
        gampl += ck * p
        gammi += ck * (-mu) ** k
        if k % 2:
            gam1 -= ck * mu ** (k - 1)
        else:
            gam2 += ck * p
    return gam1, gam2, gampl, gammi


def _k_temme_series(mu: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``K_mu`` and ``K_{mu+1}`` for ``0 < x <= 2`` by Temme's series."""
    gam1, gam2, gampl, gammi = _rgamma_pair(mu)
    x2 = 0.5 * x
    pimu = math.pi * mu
    fact = 1.0 if abs(pimu) < _EPS else pimu / math.sin(pimu)
    d = -np.log(x2)
    e = mu * d
    fact2 = np.where(np.abs(e) < _EPS, 1.0, np.sinh(e) / np.where(e == 0, 1.0, e))
    ff = fact * (gam1 * np.cosh(e) + gam2 * fact2 * d)
    total = ff.copy()
    e = np.exp(e)
    p = 0.5 * e / gampl
    q = 0.5 / (e * gammi)
    c = np.ones_like(x)
    dd = x2 * x2
    total1 = p.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAX_ITER):
        ff = (i * ff + p + q) / (i * i - mu * mu)
        c = c * dd / i
        p = p / (i - mu)
        q = q / (i + mu)
        delta = c * ff
        total = np.where(active, total + delta, total)
        total1 = np.where(active, total1 + c * (p - i * ff), total1)
        active &= np.abs(delta) >= np.abs(total) * _EPS
        if not active.any():
            break
    else:
        raise RuntimeError("Bessel K series failed to converge")
    return total, total1 * 2.0 / x


def _k_steed_cf(mu: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``K_mu`` and ``K_{mu+1}`` for ``x > 2`` by Steed's continued fraction."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25 - mu * mu
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    active = np.ones(x.shape, dtype=bool)
    for i in range(2, _MAX_ITER):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        dels = q * delh
        h = np.where(active, h + delh, h)
        s = np.where(active, s + dels, s)
        active &= np.abs(dels / s) >= _EPS
        if not active.any():
            break
    else:
        raise RuntimeError("Bessel K continued fraction failed to converge")
    h = a1 * h
    kmu = np.sqrt(math.pi / (2.0 * x)) * np.exp(-x) / s
    k1 = kmu * (mu + x + 0.5 - h) / x
    return kmu, k1


def bessel_k(nu: float, z):
    """Modified Bessel function of the second kind ``K_nu(z)`` for ``z > 0``.

    The order is reduced to ``mu = nu - round(nu)`` with ``|mu| <= 1/2``; ``K_mu``
    and ``K_{mu+1}`` come from Temme's series for ``z <= 2`` and from Steed's
    continued fraction for ``z > 2``, then forward recurrence
    ``K_{v+1} = K_{v-1} + (2 v / z) K_v`` reaches ``nu``.
    ``K_nu`` is even in ``nu``, so negative orders are accepted.
    """
    nu = abs(float(nu))
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)):
        raise ValueError("bessel_k requires z > 0")
    flat = np.atleast_1d(z).ravel()
    nl = int(nu + 0.5)
    mu = nu - nl
    kmu = np.empty_like(flat)
    k1 = np.empty_like(flat)
    small = flat <= 2.0
    if small.any():
        kmu[small], k1[small] = _k_temme_series(mu, flat[small])
    if (~small).any():
        kmu[~small], k1[~small] = _k_steed_cf(mu, flat[~small])
    xi2 = 2.0 / flat
    for i in range(1, nl + 1):
        kmu, k1 = k1, (mu + i) * xi2 * k1 + kmu
    out = kmu.reshape(z.shape)
    return out if out.ndim else float(out)
