import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import polynomial as P
from scipy import special

from spherecov.specfun import (
    BernsteinSpec,
    CompletelyMonotoneSpec,
    bessel_k,
    eval_bernstein,
    eval_cm,
    gegenbauer,
    gegenbauer_all,
    gegenbauer_at_one,
)

GRID = np.round(np.arange(0, 10.0001, 0.1), 10)

CM_CASES = [
    CompletelyMonotoneSpec("PowExp", c=3.0, gamma=1.0),
    CompletelyMonotoneSpec("PowExp", c=0.7, gamma=0.5),
    CompletelyMonotoneSpec("Matern", c=1.0, nu=0.5),
    CompletelyMonotoneSpec("Matern", c=2.0, nu=1.3),
    CompletelyMonotoneSpec("Matern", c=0.5, nu=2.5),
    CompletelyMonotoneSpec("GenCauchy", c=1.5, gamma=0.8, nu=2.0),
    CompletelyMonotoneSpec("HyperbolicSecantPow", c=1.2, nu=0.7),
]

BERNSTEIN_CASES = [
    BernsteinSpec("PowerPlusOne", a=1.7, alpha=1.0, beta=1.0),
    BernsteinSpec("PowerPlusOne", a=0.4, alpha=0.6, beta=0.5),
    BernsteinSpec("LogForm", a=1.0, alpha=1.0, b=math.e),
    BernsteinSpec("LogForm", a=2.0, alpha=0.5, b=3.0),
    BernsteinSpec("RationalForm", a=1.0, alpha=0.8, b=0.3),
]


# ---------------------------------------------------------------------------
# completely monotone catalog


def test_powexp_value():
    assert eval_cm(CompletelyMonotoneSpec("PowExp", c=3, gamma=1), 1.0) == pytest.approx(0.049787068367863944, rel=1e-14)


def test_matern_half_reduces_to_exponential():
    assert eval_cm(CompletelyMonotoneSpec("Matern", c=1, nu=0.5), 1.0) == pytest.approx(math.exp(-1), rel=1e-12)


@pytest.mark.parametrize("spec", CM_CASES, ids=lambda s: s.family)
def test_cm_at_zero(spec):
    assert eval_cm(spec, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_hyperbolic_secant_matches_printed_form():
    spec = CompletelyMonotoneSpec("HyperbolicSecantPow", c=1.2, nu=0.7)
    t = np.array([0.0, 0.3, 2.0, 9.0])
    x = 1.2 * np.sqrt(t)
    printed = 2**0.7 * (np.exp(x) + np.exp(-x)) ** -0.7
    assert np.allclose(eval_cm(spec, t), printed, rtol=1e-13, atol=0)
    # no overflow where the printed form would hit inf
    assert 0.0 <= eval_cm(spec, 1e6) < 1e-200


def test_matern_matches_scipy_bessel():
    spec = CompletelyMonotoneSpec("Matern", c=2.0, nu=1.3)
    t = np.linspace(0.01, 10, 50)
    x = 2.0 * np.sqrt(t)
    ref = x**1.3 * special.kv(1.3, x) / (2**0.3 * special.gamma(1.3))
    assert np.allclose(eval_cm(spec, t), ref, rtol=1e-10)


@pytest.mark.parametrize("spec", CM_CASES, ids=lambda s: s.family)
def test_cm_nonincreasing_and_log_convex(spec):
    g = eval_cm(spec, GRID)
    assert np.all(g > 0)
    assert np.all(np.diff(g) <= 1e-15)
    d2 = np.diff(np.log(g), 2)
    assert np.all(d2 >= -1e-10)


@pytest.mark.parametrize("kwargs", [
    dict(family="PowExp", c=0.0, gamma=1.0),
    dict(family="PowExp", c=1.0, gamma=1.5),
    dict(family="PowExp", c=1.0, gamma=0.0),
    dict(family="Matern", c=1.0, nu=0.0),
    dict(family="GenCauchy", c=1.0, gamma=0.5, nu=-1.0),
    dict(family="HyperbolicSecantPow", c=-1.0, nu=1.0),
    dict(family="Spherical", c=1.0),
])
def test_cm_invalid_parameters(kwargs):
    with pytest.raises(ValueError):
        CompletelyMonotoneSpec(**kwargs)


def test_cm_negative_argument():
    with pytest.raises(ValueError):
        eval_cm(CM_CASES[0], -0.1)


def test_cm_dict_roundtrip():
    for spec in CM_CASES:
        assert CompletelyMonotoneSpec.from_dict(spec.to_dict()) == spec


# ---------------------------------------------------------------------------
# Bernstein catalog


def test_bernstein_values():
    f = BernsteinSpec("PowerPlusOne", a=1.7, alpha=1.0, beta=1.0)
    assert eval_bernstein(f, 0.0) == 1.0
    assert eval_bernstein(f, 2.0) == pytest.approx(4.4, rel=1e-15)
    assert eval_bernstein(BernsteinSpec("LogForm", a=1, alpha=1, b=math.e), 0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("spec", BERNSTEIN_CASES, ids=lambda s: s.family)
def test_bernstein_nondecreasing_concave(spec):
    f = eval_bernstein(spec, GRID)
    assert np.all(f > 0)
    assert np.all(np.diff(f) >= -1e-15)
    assert np.all(np.diff(f, 2) <= 1e-12)


@pytest.mark.parametrize("kwargs", [
    dict(family="PowerPlusOne", a=0.0, alpha=1.0, beta=1.0),
    dict(family="PowerPlusOne", a=1.0, alpha=1.2, beta=1.0),
    dict(family="PowerPlusOne", a=1.0, alpha=1.0, beta=1.5),
    dict(family="LogForm", a=1.0, alpha=1.0, b=1.0),
    dict(family="RationalForm", a=1.0, alpha=1.0, b=1.5),
    dict(family="RationalForm", a=1.0, alpha=1.0, b=0.0),
])
def test_bernstein_invalid_parameters(kwargs):
    with pytest.raises(ValueError):
        BernsteinSpec(**kwargs)


def test_bernstein_strictly_increasing_flag():
    assert BernsteinSpec("PowerPlusOne", a=1, alpha=1, beta=1).strictly_increasing
    assert not BernsteinSpec("PowerPlusOne", a=1, alpha=1, beta=0).strictly_increasing
    assert not BernsteinSpec("RationalForm", a=1, alpha=1, b=1.0).strictly_increasing
    assert BernsteinSpec("LogForm", a=1, alpha=1, b=2.0).strictly_increasing


# ---------------------------------------------------------------------------
# Gegenbauer polynomials


def _generating_coefficients(lam: float, x: float, nmax: int) -> np.ndarray:
    """Coefficients of r^n in (1 - 2 r x + r^2)^(-lam), by binomial series expansion.

    (1 - s)^(-lam) with s = 2 r x - r^2 is expanded as sum_k (lam)_k / k! s^k;
    truncating at k = nmax is exact up to r^nmax.  For lam = 0 the Chebyshev
    generating function (1 - r x) / (1 - 2 r x + r^2) is used instead.
    """
    s = np.array([0.0, 2.0 * x, -1.0])
    if lam == 0:
        geo = np.zeros(nmax + 1)
        geo[0] = 1.0
        term = np.array([1.0])
        for _ in range(nmax):
            term = P.polymul(term, s)[: nmax + 1]
            geo[: term.size] += term
        return P.polymul(geo, [1.0, -x])[: nmax + 1]
    total = np.zeros(nmax + 1)
    total[0] = 1.0
    term = np.array([1.0])
    coef = 1.0
    for k in range(1, nmax + 1):
        coef *= (lam + k - 1) / k
        term = P.polymul(term, s)[: nmax + 1]
        total[: term.size] += coef * term
    return total


@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0, 1.5])
@pytest.mark.parametrize("x", [-1.0, -0.5, 0.0, 0.5, 1.0])
def test_gegenbauer_matches_generating_function(lam, x):
    ref = _generating_coefficients(lam, x, 8)
    got = gegenbauer_all(8, lam, x)
    assert np.allclose(got, ref, rtol=0, atol=1e-9)


def test_gegenbauer_examples():
    assert gegenbauer(0, 2.3, 0.17) == 1.0
    assert gegenbauer(2, 0.5, 1.0) == pytest.approx(1.0)
    assert gegenbauer(3, 0.5, 0.5) == pytest.approx(-0.4375, abs=1e-15)


def test_gegenbauer_matches_scipy():
    x = np.linspace(-1, 1, 41)
    for lam in (0.5, 1.0, 2.5):
        for n in (0, 1, 5, 20):
            assert np.allclose(gegenbauer(n, lam, x), special.eval_gegenbauer(n, lam, x), atol=1e-9)


def test_gegenbauer_at_one():
    for lam in (0.0, 0.5, 1.0, 1.5):
        for n in range(10):
            assert gegenbauer(n, lam, 1.0) == pytest.approx(gegenbauer_at_one(n, lam), rel=1e-12)


@pytest.mark.parametrize("args", [(-1, 0.5, 0.0), (2, -0.5, 0.0), (2, 0.5, 1.5)])
def test_gegenbauer_preconditions(args):
    with pytest.raises(ValueError):
        gegenbauer(*args)


# ---------------------------------------------------------------------------
# Bessel K


def _k_half_integer(nu: float, z):
    """Closed forms K_{1/2}, K_{3/2}, K_{5/2}."""
    base = np.sqrt(np.pi / (2 * z)) * np.exp(-z)
    if nu == 0.5:
        return base
    if nu == 1.5:
        return base * (1 + 1 / z)
    if nu == 2.5:
        return base * (1 + 3 / z + 3 / z**2)
    raise ValueError(nu)


def test_bessel_examples():
    assert bessel_k(0.5, 1.0) == pytest.approx(math.sqrt(math.pi / 2) * math.exp(-1), rel=1e-14)
    assert bessel_k(1.5, 2.0) == pytest.approx(0.179906657952092, rel=1e-12)
    assert bessel_k(-0.5, 1.0) == bessel_k(0.5, 1.0)


@pytest.mark.parametrize("nu", [0.5, 1.5, 2.5])
def test_bessel_half_integer_closed_forms(nu):
    z = np.geomspace(1e-6, 50, 400)
    assert np.max(np.abs(bessel_k(nu, z) / _k_half_integer(nu, z) - 1)) <= 1e-10


def test_bessel_recurrence_identity():
    z = np.geomspace(1e-3, 40, 100)
    for nu in (0.3, 1.1, 2.7):
        lhs = bessel_k(nu + 1, z)
        rhs = bessel_k(nu - 1, z) + 2 * nu / z * bessel_k(nu, z)
        assert np.allclose(lhs, rhs, rtol=1e-11)


@given(st.floats(0.0, 6.0, allow_subnormal=False), st.floats(1e-6, 50.0))
def test_bessel_matches_scipy(nu, z):
    assert bessel_k(nu, z) == pytest.approx(float(special.kv(nu, z)), rel=1e-10)


@pytest.mark.parametrize("z", [0.0, -1.0, float("nan")])
def test_bessel_domain(z):
    with pytest.raises(ValueError):
        bessel_k(1.0, z)
