"""Matrix-valued space-time covariances on the sphere.

Every model exposes ``cov(i, j, dist, lag)``, vectorised over arrays of
variable indices (0-based), spatial distances and time lags.  Distances are
in the units of the model's spatial scales; the presets A-D use kilometres on
a sphere of radius 6378 km, which amounts to absorbing the radius into the
scale parameters of the unit-sphere formulas.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import ClassVar, Sequence

import numpy as np

from .geometry import EARTH_RADIUS_KM, SpaceTimeLocation, pairwise_angles, unit_vectors
from .specfun import (
    BernsteinSpec,
    CompletelyMonotoneSpec,
    eval_bernstein,
    eval_cm,
)

DEFAULT_MAX_SIZE = 5000


# ---------------------------------------------------------------------------
# Building blocks


def cov_gneiting_uni(theta, u, g: CompletelyMonotoneSpec, f: BernsteinSpec):
    """Gneiting model ``f(theta)**-1/2 g(u**2 / f(theta))``."""
    ft = eval_bernstein(f, theta)
    return ft**-0.5 * eval_cm(g, np.square(u) / ft)


def cov_modified_gneiting_uni(theta, u, n: int, g: CompletelyMonotoneSpec, f: BernsteinSpec):
    """Modified Gneiting model ``f(|u|)**-(n+2) g(theta f(|u|))``."""
    fu = eval_bernstein(f, np.abs(u))
    return fu ** -(n + 2.0) * eval_cm(g, np.asarray(theta) * fu)


def latent_kernel(theta, u, zeta, g: CompletelyMonotoneSpec, f1: BernsteinSpec, f2: BernsteinSpec):
    """Latent-dimension Gneiting kernel with one temporal and one latent coordinate.

    ``K = f2(theta)**-1/2 f1(zeta / f2(theta))**-1/2 g(u**2 / f1(zeta / f2(theta)))``
    where ``zeta`` is the squared latent separation.
    """
    zeta = np.asarray(zeta, dtype=float)
    if np.any(zeta < 0):
        raise ValueError("latent separation zeta must be nonnegative")
    f2t = eval_bernstein(f2, theta)
    f1z = eval_bernstein(f1, zeta / f2t)
    return f2t**-0.5 * f1z**-0.5 * eval_cm(g, np.square(u) / f1z)


def _preset_spatial(c_s: float) -> BernsteinSpec:
    return BernsteinSpec("PowerPlusOne", a=400.0 / c_s, alpha=1.0, beta=1.0)


def _preset_temporal_cm(c_t: float) -> CompletelyMonotoneSpec:
    # exp(-3 |u| / c_T / sqrt(.)) written as g(u**2 / .) with g(t) = exp(-(3/c_T) t**(1/2))
    return CompletelyMonotoneSpec("PowExp", c=3.0 / c_t, gamma=0.5)


def _preset_parts(c_t: float) -> tuple[CompletelyMonotoneSpec, BernsteinSpec]:
    return (CompletelyMonotoneSpec("PowExp", c=3.0, gamma=1.0),
            BernsteinSpec("PowerPlusOne", a=1.7 / c_t, alpha=1.0, beta=1.0))


# ---------------------------------------------------------------------------
# Parameters and transforms


@dataclass(frozen=True)
class Parameter:
    """A named scalar with bounds; the unconstrained transform follows from the bounds."""

    name: str
    lower: float = -math.inf
    upper: float = math.inf

    @property
    def transform(self) -> str:
        lo, hi = self.lower, self.upper
        if lo == -1.0 and hi == 1.0:
            return "atanh"
        if math.isfinite(lo) and math.isfinite(hi):
            return "logit"
        if math.isfinite(lo):
            return "log"
        return "identity"

    def to_free(self, x: float) -> float:
        lo, hi = self.lower, self.upper
        t = self.transform
        if t == "atanh":
            return math.atanh(x)
        if t == "logit":
            p = (x - lo) / (hi - lo)
            return math.log(p) - math.log1p(-p)
        if t == "log":
            return math.log(x - lo)
        return float(x)

    def from_free(self, y: float) -> float:
        lo, hi = self.lower, self.upper
        t = self.transform
        if t == "atanh":
            return math.tanh(y)
        if t == "logit":
            if y >= 0:
                p = 1.0 / (1.0 + math.exp(-y))
            else:
                e = math.exp(y)
                p = e / (1.0 + e)
            return lo + (hi - lo) * p
        if t == "log":
            return lo + math.exp(y)
        return float(y)


@dataclass
class ParameterVector:
    """Ordered named parameters with bounds, mapped to and from an unconstrained space."""

    params: tuple[Parameter, ...]
    values: dict[str, float]

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    def to_free(self) -> np.ndarray:
        return np.array([p.to_free(self.values[p.name]) for p in self.params])

    def with_free(self, y: Sequence[float]) -> "ParameterVector":
        vals = {p.name: p.from_free(float(v)) for p, v in zip(self.params, y)}
        return ParameterVector(self.params, vals)

    def within_bounds(self) -> bool:
        return all(p.lower <= self.values[p.name] <= p.upper for p in self.params)


# ---------------------------------------------------------------------------
# Models


_REGISTRY: dict[str, type["CovarianceModel"]] = {}


class CovarianceModel:
    """Base class; subclasses are registered by their ``family`` tag."""

    family: ClassVar[str] = ""
    PARAMS: ClassVar[tuple[Parameter, ...]] = ()

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if cls.family:
            _REGISTRY[cls.family] = cls

    @property
    def m(self) -> int:
        raise NotImplementedError

    def cov(self, i, j, dist, lag) -> np.ndarray:
        raise NotImplementedError

    def _check_index(self, i, j):
        i = np.asarray(i)
        j = np.asarray(j)
        if np.any((i < 0) | (i >= self.m) | (j < 0) | (j >= self.m)):
            raise IndexError(f"variable index out of range for an {self.m}-variate model")
        return i, j

    def variances(self) -> np.ndarray:
        idx = np.arange(self.m)
        return np.asarray(self.cov(idx, idx, np.zeros(self.m), np.zeros(self.m)), dtype=float)

    def matrix(self, dist: float, lag: float) -> np.ndarray:
        """The ``m x m`` matrix ``C(dist, lag)``."""
        i, j = np.meshgrid(np.arange(self.m), np.arange(self.m), indexing="ij")
        return np.asarray(self.cov(i, j, np.full(i.shape, dist), np.full(i.shape, lag)))

    # parameter handling for estimation
    def param_values(self) -> dict[str, float]:
        return {p.name: float(getattr(self, p.name)) for p in self.PARAMS}

    def parameter_vector(self, bounds: dict | None = None) -> ParameterVector:
        params = []
        for p in self.PARAMS:
            if bounds and p.name in bounds:
                lo, hi = bounds[p.name]
                p = Parameter(p.name, -math.inf if lo is None else lo, math.inf if hi is None else hi)
            params.append(p)
        return ParameterVector(tuple(params), self.param_values())

    def with_params(self, values: dict[str, float]) -> "CovarianceModel":
        """Copy of this model with the named parameters replaced."""
        return dataclasses.replace(self, **values)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.param_values()}


def model_from_dict(d: dict) -> CovarianceModel:
    """Build a model from ``{"family": ..., "params": {...}}`` (the config form)."""
    family = d.get("family")
    if family not in _REGISTRY:
        raise ValueError(f"unknown model family {family!r}; known: {sorted(_REGISTRY)}")
    return _REGISTRY[family].from_dict(d)


def model_families() -> list[str]:
    return sorted(_REGISTRY)


def _as_cm(x) -> CompletelyMonotoneSpec:
    return x if isinstance(x, CompletelyMonotoneSpec) else CompletelyMonotoneSpec.from_dict(x)


def _as_bernstein(x) -> BernsteinSpec:
    return x if isinstance(x, BernsteinSpec) else BernsteinSpec.from_dict(x)


def _check_n(n: int):
    if int(n) != n or not 1 <= n <= 3:
        raise ValueError(f"n must be an integer in 1..3, got {n}")


@dataclass
class GneitingUnivariate(CovarianceModel):
    g: CompletelyMonotoneSpec
    f: BernsteinSpec
    sigma2: float = 1.0

    family: ClassVar[str] = "GneitingUnivariate"
    PARAMS: ClassVar[tuple[Parameter, ...]] = (Parameter("sigma2", 0.0),)

    def __post_init__(self):
        self.g, self.f = _as_cm(self.g), _as_bernstein(self.f)
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    @property
    def m(self) -> int:
        return 1

    def cov(self, i, j, dist, lag):
        self._check_index(i, j)
        return self.sigma2 * cov_gneiting_uni(dist, lag, self.g, self.f)

    def to_dict(self):
        return {"family": self.family, "params": self.param_values(),
                "g": self.g.to_dict(), "f": self.f.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(g=d["g"], f=d["f"], **d.get("params", {}))


@dataclass
class ModifiedGneitingUni(CovarianceModel):
    g: CompletelyMonotoneSpec
    f: BernsteinSpec
    n: int = 1
    sigma2: float = 1.0

    family: ClassVar[str] = "ModifiedGneitingUni"
    PARAMS: ClassVar[tuple[Parameter, ...]] = (Parameter("sigma2", 0.0),)

    def __post_init__(self):
        self.g, self.f = _as_cm(self.g), _as_bernstein(self.f)
        _check_n(self.n)
        if not self.f.strictly_increasing:
            raise ValueError("modified Gneiting needs a strictly increasing f")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    @property
    def m(self) -> int:
        return 1

    def cov(self, i, j, dist, lag):
        self._check_index(i, j)
        return self.sigma2 * cov_modified_gneiting_uni(dist, lag, self.n, self.g, self.f)

    def to_dict(self):
        return {"family": self.family, "params": self.param_values(), "n": self.n,
                "g": self.g.to_dict(), "f": self.f.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(g=d["g"], f=d["f"], n=d.get("n", 1), **d.get("params", {}))


@dataclass
class ModifiedGneitingMulti(CovarianceModel):
    """Multivariate modified Gneiting class.

    ``C_ij = sigma_i sigma_j rho_ij f(|u|)**-(n+2) g(dist f(|u|) / c_ij)`` with
    ``sigma`` the marginal standard deviations.  Validity additionally requires
    the condition checked by :func:`check_validity_constraint`.
    """

    sigma: np.ndarray
    rho: np.ndarray
    c: np.ndarray
    g: CompletelyMonotoneSpec
    f: BernsteinSpec
    n: int = 1

    family: ClassVar[str] = "ModifiedGneitingMulti"

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.rho = np.asarray(self.rho, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        self.g, self.f = _as_cm(self.g), _as_bernstein(self.f)
        m = self.sigma.size
        _check_n(self.n)
        if self.rho.shape != (m, m) or self.c.shape != (m, m):
            raise ValueError("rho and c must be m x m")
        if np.any(self.sigma <= 0):
            raise ValueError("sigma must be positive")
        if np.any(np.abs(self.rho) > 1) or not np.allclose(np.diag(self.rho), 1.0):
            raise ValueError("need |rho_ij| <= 1 and rho_ii = 1")
        if not (np.array_equal(self.rho, self.rho.T) and np.array_equal(self.c, self.c.T)):
            raise ValueError("rho and c must be symmetric")
        if np.any(self.c <= 0):
            raise ValueError("scales c_ij must be positive")
        if not self.f.strictly_increasing:
            raise ValueError("modified Gneiting needs a strictly increasing f")

    @property
    def m(self) -> int:
        return self.sigma.size

    def cov(self, i, j, dist, lag):
        i, j = self._check_index(i, j)
        scale = self.sigma[i] * self.sigma[j] * self.rho[i, j]
        fu = eval_bernstein(self.f, np.abs(lag))
        return scale * fu ** -(self.n + 2.0) * eval_cm(self.g, np.asarray(dist) * fu / self.c[i, j])

    def to_dict(self):
        return {"family": self.family, "sigma": self.sigma.tolist(), "rho": self.rho.tolist(),
                "c": self.c.tolist(), "n": self.n, "g": self.g.to_dict(), "f": self.f.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(sigma=d["sigma"], rho=d["rho"], c=d["c"], g=d["g"], f=d["f"], n=d.get("n", 1))

    def param_values(self):
        return {}


@dataclass
class LatentKernel(CovarianceModel):
    """Latent-dimension model ``C_ij = sigma_i sigma_j K(dist, lag, (xi_i - xi_j)**2)``."""

    xi: np.ndarray
    g: CompletelyMonotoneSpec
    f1: BernsteinSpec
    f2: BernsteinSpec
    sigma: np.ndarray | None = None

    family: ClassVar[str] = "LatentKernel"

    def __post_init__(self):
        self.xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        self.sigma = np.ones(self.xi.size) if self.sigma is None else np.asarray(self.sigma, dtype=float)
        self.g, self.f1, self.f2 = _as_cm(self.g), _as_bernstein(self.f1), _as_bernstein(self.f2)
        if self.sigma.shape != self.xi.shape or np.any(self.sigma <= 0):
            raise ValueError("sigma must be positive with one entry per variable")

    @property
    def m(self) -> int:
        return self.xi.size

    def cov(self, i, j, dist, lag):
        i, j = self._check_index(i, j)
        zeta = np.square(self.xi[i] - self.xi[j])
        return self.sigma[i] * self.sigma[j] * latent_kernel(dist, lag, zeta, self.g, self.f1, self.f2)

    def to_dict(self):
        return {"family": self.family, "xi": self.xi.tolist(), "sigma": self.sigma.tolist(),
                "g": self.g.to_dict(), "f1": self.f1.to_dict(), "f2": self.f2.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(xi=d["xi"], g=d["g"], f1=d["f1"], f2=d["f2"], sigma=d.get("sigma"))

    def param_values(self):
        return {}


# ---------------------------------------------------------------------------
# Bivariate presets used in the temperature/precipitation application


def _validate_bivariate_common(sigma2_1, sigma2_2, rho12):
    if not (sigma2_1 > 0 and sigma2_2 > 0):
        raise ValueError("variances must be positive")
    if not abs(rho12) <= 1:
        raise ValueError("need |rho12| <= 1")


@dataclass
class ModelA(CovarianceModel):
    """m-separable Gneiting model.

    ``C_ij = sigma_i sigma_j rho_ij (400 d / c_s + 1)**-1/2
    exp(-3 |u| / c_t / (400 d / c_s + 1)**1/2)``.
    """

    sigma2_1: float
    sigma2_2: float
    rho12: float
    c_s: float
    c_t: float

    family: ClassVar[str] = "ModelA"
    PARAMS: ClassVar[tuple[Parameter, ...]] = (
        Parameter("sigma2_1", 0.0), Parameter("sigma2_2", 0.0), Parameter("rho12", -1.0, 1.0),
        Parameter("c_s", 0.0), Parameter("c_t", 0.0))

    def __post_init__(self):
        _validate_bivariate_common(self.sigma2_1, self.sigma2_2, self.rho12)
        if not (self.c_s > 0 and self.c_t > 0):
            raise ValueError("scales must be positive")

    @property
    def m(self) -> int:
        return 2

    def _coef(self, i, j):
        sd = np.sqrt([self.sigma2_1, self.sigma2_2])
        rho = np.array([[1.0, self.rho12], [self.rho12, 1.0]])
        return sd[i] * sd[j] * rho[i, j]

    def cov(self, i, j, dist, lag):
        i, j = self._check_index(i, j)
        k = cov_gneiting_uni(dist, lag, _preset_temporal_cm(self.c_t), _preset_spatial(self.c_s))
        return self._coef(i, j) * k

    @classmethod
    def from_dict(cls, d):
        return cls(**d["params"])


@dataclass
class ModelC(CovarianceModel):
    """Non-separable bivariate modified Gneiting model with ``c_12 = max(c_11, c_22)``.

    ``C_ij = sigma_i sigma_j rho_ij (1 + 1.7 |u| / c_t)**-3
    exp(-3 d (1 + 1.7 |u| / c_t) / c_ij)``.
    """

    sigma2_1: float
    sigma2_2: float
    rho12: float
    c_11: float
    c_22: float
    c_t: float

    family: ClassVar[str] = "ModelC"
    PARAMS: ClassVar[tuple[Parameter, ...]] = (
        Parameter("sigma2_1", 0.0), Parameter("sigma2_2", 0.0), Parameter("rho12", -1.0, 1.0),
        Parameter("c_11", 0.0), Parameter("c_22", 0.0), Parameter("c_t", 0.0))

    def __post_init__(self):
        _validate_bivariate_common(self.sigma2_1, self.sigma2_2, self.rho12)
        if not (self.c_11 > 0 and self.c_22 > 0 and self.c_t > 0):
            raise ValueError("scales must be positive")

    @property
    def m(self) -> int:
        return 2

    @property
    def c_12(self) -> float:
        return float(max(self.c_11, self.c_22))

    def as_modified_gneiting(self) -> ModifiedGneitingMulti:
        g, f = _preset_parts(self.c_t)
        c12 = self.c_12
        return ModifiedGneitingMulti(
            sigma=np.sqrt([self.sigma2_1, self.sigma2_2]),
            rho=[[1.0, self.rho12], [self.rho12, 1.0]],
            c=[[self.c_11, c12], [c12, self.c_22]], g=g, f=f, n=1)

    def cov(self, i, j, dist, lag):
        return self.as_modified_gneiting().cov(i, j, dist, lag)

    def to_dict(self):
        d = super().to_dict()
        d["derived"] = {"c_12": self.c_12}
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d["params"])


@dataclass
class ModelB(CovarianceModel):
    """m-separable modified Gneiting model: Model C with ``c_11 = c_22 = c_12 = c_s``."""

    sigma2_1: float
    sigma2_2: float
    rho12: float
    c_s: float
    c_t: float

    family: ClassVar[str] = "ModelB"
    PARAMS: ClassVar[tuple[Parameter, ...]] = ModelA.PARAMS

    def __post_init__(self):
        _validate_bivariate_common(self.sigma2_1, self.sigma2_2, self.rho12)
        if not (self.c_s > 0 and self.c_t > 0):
            raise ValueError("scales must be positive")

    @property
    def m(self) -> int:
        return 2

    def as_model_c(self) -> ModelC:
        return ModelC(self.sigma2_1, self.sigma2_2, self.rho12, self.c_s, self.c_s, self.c_t)

    def as_modified_gneiting(self) -> ModifiedGneitingMulti:
        return self.as_model_c().as_modified_gneiting()

    def cov(self, i, j, dist, lag):
        return self.as_modified_gneiting().cov(i, j, dist, lag)

    @classmethod
    def from_dict(cls, d):
        return cls(**d["params"])


@dataclass
class ModelD(CovarianceModel):
    """Latent-dimension linear model of coregionalization (bivariate).

    ``Z_1 = a11 Y(xi_1)``, ``Z_2 = a21 Y(xi_2) + a22 W`` where ``Y`` has the
    latent Gneiting kernel with scales ``c_s1, c_t1`` and ``W`` an independent
    Gneiting field with scales ``c_s2, c_t2``; ``zeta12 = (xi_1 - xi_2)**2``.
    """

    a11: float
    a21: float
    a22: float
    c_s1: float
    c_s2: float
    c_t1: float
    c_t2: float
    zeta12: float

    family: ClassVar[str] = "ModelD"
    PARAMS: ClassVar[tuple[Parameter, ...]] = (
        Parameter("a11", 0.0), Parameter("a21"), Parameter("a22", 0.0),
        Parameter("c_s1", 0.0), Parameter("c_s2", 0.0), Parameter("c_t1", 0.0),
        Parameter("c_t2", 0.0), Parameter("zeta12", 0.0))

    def __post_init__(self):
        if not (self.a11 > 0 and self.a22 > 0):
            raise ValueError("a11 and a22 must be positive")
        if not math.isfinite(self.a21):
            raise ValueError("a21 must be finite")
        if not self.zeta12 >= 0:
            raise ValueError("zeta12 must be nonnegative")
        if not all(v > 0 for v in (self.c_s1, self.c_s2, self.c_t1, self.c_t2)):
            raise ValueError("scales must be positive")

    @property
    def m(self) -> int:
        return 2

    def kernel(self, dist, lag, zeta):
        """Latent kernel K of the shared field ``Y``."""
        f1 = BernsteinSpec("PowerPlusOne", a=1.0, alpha=1.0, beta=1.0)
        return latent_kernel(dist, lag, zeta, _preset_temporal_cm(self.c_t1),
                             f1, _preset_spatial(self.c_s1))

    def residual(self, dist, lag):
        """Gneiting covariance R of the independent field ``W``."""
        return cov_gneiting_uni(dist, lag, _preset_temporal_cm(self.c_t2), _preset_spatial(self.c_s2))

    def cov(self, i, j, dist, lag):
        i, j = self._check_index(i, j)
        a = np.array([self.a11, self.a21])
        zeta = np.where(i != j, self.zeta12, 0.0)
        out = a[i] * a[j] * self.kernel(dist, lag, zeta)
        both2 = (i == 1) & (j == 1)
        if np.any(both2):
            out = out + np.where(both2, self.a22**2 * self.residual(dist, lag), 0.0)
        return out

    @classmethod
    def from_dict(cls, d):
        if d.get("m", 2) != 2:
            raise NotImplementedError("ModelD is defined for two variables only")
        return cls(**d["params"])


# ---------------------------------------------------------------------------
# Validity constraint for the multivariate modified Gneiting class


@dataclass(frozen=True)
class ConstraintReport:
    valid: bool
    margin: float
    row_sums: tuple[float, ...]


def check_validity_constraint(model) -> ConstraintReport:
    """Check ``sum_{j != i} |rho_ij| (c_ii / c_ij)**(n+1) <= 1`` for every ``i``.

    ``margin = max_i s_i - 1``; the model is valid iff ``margin <= 0``.
    """
    if isinstance(model, (ModelB, ModelC)):
        model = model.as_modified_gneiting()
    if not isinstance(model, ModifiedGneitingMulti):
        raise TypeError(f"constraint applies to modified Gneiting models, not {type(model).__name__}")
    m, n = model.m, model.n
    sums = []
    for i in range(m):
        s = sum(abs(model.rho[i, j]) * (model.c[i, i] / model.c[i, j]) ** (n + 1)
                for j in range(m) if j != i)
        sums.append(float(s))
    margin = max(sums) - 1.0 if sums else -1.0
    return ConstraintReport(valid=margin <= 0, margin=margin, row_sums=tuple(sums))


# ---------------------------------------------------------------------------
# Covariance assembly


@dataclass
class CovarianceMatrix:
    values: np.ndarray
    var: np.ndarray
    family: str
    radius_km: float
    metadata: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.values.shape


def as_coords(locations) -> np.ndarray:
    """Coerce locations to an ``(N, 3)`` array of ``lon, lat, time``."""
    if len(locations) and isinstance(locations[0], SpaceTimeLocation):
        return np.array([[loc.point.lon, loc.point.lat, loc.time] for loc in locations], dtype=float)
    coords = np.asarray(locations, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != 3:
        raise ValueError("locations must be SpaceTimeLocation objects or an (N, 3) array of lon, lat, time")
    return coords


def cross_covariance(coords_a, var_a, coords_b, var_b, model: CovarianceModel,
                     radius_km: float = EARTH_RADIUS_KM) -> np.ndarray:
    """Rectangular matrix ``C_{v(a) v(b)}(dist(a, b), t_a - t_b)``."""
    ca, cb = as_coords(coords_a), as_coords(coords_b)
    va, vb = np.asarray(var_a, dtype=int), np.asarray(var_b, dtype=int)
    dist = radius_km * pairwise_angles(unit_vectors(ca[:, 0], ca[:, 1]), unit_vectors(cb[:, 0], cb[:, 1]))
    lag = ca[:, 2][:, None] - cb[:, 2][None, :]
    return np.asarray(model.cov(va[:, None], vb[None, :], dist, lag), dtype=float)


def assemble_covariance(locations, var, model: CovarianceModel, radius_km: float = EARTH_RADIUS_KM,
                        max_size: int = DEFAULT_MAX_SIZE, block: int = 512) -> CovarianceMatrix:
    """Dense covariance over observation rows ``(location, time, variable)``.

    Only the upper triangle is evaluated; the lower triangle is its mirror, so
    the result is exactly symmetric.
    """
    coords = as_coords(locations)
    var = np.asarray(var, dtype=int)
    n = coords.shape[0]
    if var.shape != (n,):
        raise ValueError("need one variable index per location")
    if n > max_size:
        raise MemoryError(f"refusing to assemble a {n} x {n} covariance (cap {max_size}); "
                          "raise max_size explicitly if this is intended")
    xyz = unit_vectors(coords[:, 0], coords[:, 1])
    t = coords[:, 2]
    out = np.zeros((n, n))
    for r0 in range(0, n, block):
        r1 = min(n, r0 + block)
        dist = radius_km * pairwise_angles(xyz[r0:r1], xyz[r0:])
        lag = t[r0:r1, None] - t[None, r0:]
        out[r0:r1, r0:] = model.cov(var[r0:r1, None], var[None, r0:], dist, lag)
    upper = np.triu(out)
    values = upper + np.triu(out, 1).T
    return CovarianceMatrix(values, var, model.family, radius_km)
