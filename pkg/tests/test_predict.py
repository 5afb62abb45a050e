import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from spherecov.data import Dataset
from spherecov.models import ModelA, ModelC, assemble_covariance, cross_covariance
from spherecov.predict import CokrigingSystem, cokrige, drop_one_cv, gaussian_crps
from spherecov.simulate import random_design, simulate

TRUTH_C = ModelC(1.85, 4.69e-5, 0.28, 2900.0, 1500.0, 4.0)


def crps_by_integration(mu, sigma, y):
    """CRPS as the integral of (F(x) - 1{x >= y})^2, split at y."""
    F = lambda x: norm.cdf(x, mu, sigma)  # noqa: E731
    lo = integrate.quad(lambda x: F(x) ** 2, -np.inf, y, epsabs=1e-12, epsrel=1e-12, limit=200)[0]
    hi = integrate.quad(lambda x: (1 - F(x)) ** 2, y, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)[0]
    return lo + hi


def crps_grid():
    return [(mu, s, y) for mu in (-2.0, 0.0, 2.0) for s in (0.5, 1.0, 3.0) for y in range(-3, 4)]


def simulated(model, n_sites, n_times, seed):
    coords, var = random_design(n_sites, n_times, model.m, seed)
    values = simulate(model, coords, var, seed=20_000 + seed)[0].values
    return Dataset.from_arrays(coords, var, values, m=model.m)


# ---------------------------------------------------------------------------
# CRPS


def test_crps_standard_normal_at_mean():
    assert gaussian_crps(0.0, 1.0, 0.0) == pytest.approx(2 / math.sqrt(2 * math.pi) - 1 / math.sqrt(math.pi), rel=1e-14)
    assert gaussian_crps(0.0, 1.0, 0.0) == pytest.approx(0.23370, abs=1e-5)


def test_crps_degenerate():
    assert gaussian_crps(1.5, 0.0, 1.5) == 0.0
    assert gaussian_crps(1.5, 0.0, -0.5) == 2.0
    with pytest.raises(ValueError):
        gaussian_crps(0.0, -1.0, 0.0)


def test_crps_matches_integration_grid():
    grid = crps_grid()
    assert len(grid) == 63
    mu, s, y = (np.array(c) for c in zip(*grid))
    closed = gaussian_crps(mu, s, y)
    ref = np.array([crps_by_integration(*g) for g in grid])
    assert np.max(np.abs(closed - ref)) <= 1e-6


@given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(-5, 5), st.floats(0.1, 10))
def test_crps_positive_homogeneity(mu, s, y, a):
    assert gaussian_crps(a * mu, a * s, a * y) == pytest.approx(a * gaussian_crps(mu, s, y), rel=1e-9, abs=1e-12)


# ---------------------------------------------------------------------------
# cokriging


def test_hand_system():
    """S = [[1, .5], [.5, 1]], c = (.5, .25), z = (1, 2): mean 0.5, variance 0.75."""
    # one site, exponential temporal decay with C(1) = 1/2 and C(2) = 1/4:
    # observations at t = 0 (z = 1) and t = 1 (z = 2), target at t = -1
    model = ModelA(1.0, 1.0, 0.0, 100.0, 3.0 / math.log(2.0))
    ds = Dataset([10.0, 10.0], [20.0, 20.0], [0.0, 1.0], [0, 0], [1.0, 2.0], m=2)
    S = assemble_covariance(ds.coords, ds.var, model).values
    assert np.allclose(S, [[1.0, 0.5], [0.5, 1.0]], rtol=1e-14)
    target = np.array([[10.0, 20.0, -1.0]])
    assert np.allclose(cross_covariance(target, [0], ds.coords, ds.var, model), [[0.5, 0.25]], rtol=1e-14)
    pred = cokrige(ds, model, target, [0])
    assert pred.mean[0] == pytest.approx(0.5, rel=1e-13)
    assert pred.variance[0] == pytest.approx(0.75, rel=1e-13)


def test_exact_at_observations():
    ds = simulated(TRUTH_C, 30, 3, seed=0)
    pred = cokrige(ds, TRUTH_C, ds.coords, ds.var)
    assert np.max(np.abs(pred.mean - ds.value)) <= 1e-8
    assert np.max(pred.variance) <= 1e-8


def test_far_target_recovers_prior():
    model = ModelC(2.0, 0.5, 0.3, 300.0, 200.0, 0.5)
    ds = simulated(model, 20, 2, seed=1)
    target = np.array([[-100.0, 60.0, 50.0], [-100.0, 60.0, 50.0]])
    pred = cokrige(ds, model, target, [0, 1])
    assert np.allclose(pred.mean, 0.0, atol=1e-12)
    assert np.allclose(pred.variance, [2.0, 0.5], rtol=1e-12)


def test_variance_never_exceeds_prior():
    ds = simulated(TRUTH_C, 25, 3, seed=2)
    coords, var = random_design(40, 3, 2, seed=99)
    pred = CokrigingSystem(ds, TRUTH_C).predict(coords, var)
    prior = TRUTH_C.variances()[var]
    assert np.all(pred.variance <= prior + 1e-10)
    assert np.all(pred.variance >= 0)


# ---------------------------------------------------------------------------
# drop-one cross-validation


def drop_one_bruteforce(ds, model):
    mean, var = np.empty(len(ds)), np.empty(len(ds))
    for k in range(len(ds)):
        keep = np.arange(len(ds)) != k
        p = cokrige(ds.subset(keep), model, ds.coords[k:k + 1], ds.var[k:k + 1])
        mean[k], var[k] = p.mean[0], p.variance[0]
    return mean, var


def test_drop_one_matches_refitting():
    ds = simulated(TRUTH_C, 12, 3, seed=3)
    res = drop_one_cv(ds, TRUTH_C)
    mean, var = drop_one_bruteforce(ds, TRUTH_C)
    assert np.allclose(res.mean, mean, rtol=1e-8, atol=1e-10)
    assert np.allclose(res.variance, var, rtol=1e-8, atol=1e-14)
    for v in range(2):
        sel = ds.var == v
        assert res.scores.mse[v] == pytest.approx(np.mean((ds.value[sel] - mean[sel]) ** 2), rel=1e-8)


def test_drop_one_duplicate_observation_predicted_exactly():
    ds = simulated(TRUTH_C, 10, 2, seed=4)
    dup = Dataset(np.r_[ds.lon, ds.lon[0]], np.r_[ds.lat, ds.lat[0]], np.r_[ds.time, ds.time[0]],
                  np.r_[ds.var, ds.var[0]], np.r_[ds.value, ds.value[0]], m=2)
    res = drop_one_cv(dup, TRUTH_C)
    assert abs(res.mean[0] - dup.value[0]) <= 1e-6
    assert abs(res.mean[-1] - dup.value[-1]) <= 1e-6
    assert res.scores.fallbacks >= 2


def test_drop_one_row_order_invariant():
    ds = simulated(TRUTH_C, 15, 3, seed=5)
    perm = np.random.default_rng(1).permutation(len(ds))
    a = drop_one_cv(ds, TRUTH_C).scores
    b = drop_one_cv(ds.subset(perm), TRUTH_C).scores
    assert np.allclose(a.mse, b.mse, rtol=1e-10, atol=0)
    assert np.allclose(a.crps, b.crps, rtol=1e-10, atol=0)


def test_drop_one_beats_zero_predictor():
    wins = 0
    for seed in range(10):
        ds = simulated(TRUTH_C, 60, 4, seed=100 + seed)
        mse = drop_one_cv(ds, TRUTH_C).scores.mse
        wins += all(mse[v] <= TRUTH_C.variances()[v] for v in range(2))
    assert wins >= 9


def test_score_table_layout():
    ds = simulated(TRUTH_C, 10, 2, seed=6)
    scores = drop_one_cv(ds, TRUTH_C, log_cl=-12.5).scores
    assert list(scores.row()) == ["log_cl", "MSE_1", "MSE_2", "CRPS_1", "CRPS_2"]
    d = scores.to_dict()
    assert d["counts"] == [10 * 2, 10 * 2]
    assert all(v >= 0 and np.isfinite(v) for k, v in scores.row().items() if k != "log_cl")


def test_model_a_is_worse_on_model_c_data():
    ds = simulated(TRUTH_C, 60, 4, seed=7)
    wrong = ModelA(1.85, 4.69e-5, 0.28, 2900.0, 4.0)
    assert drop_one_cv(ds, TRUTH_C).scores.mse[0] <= drop_one_cv(ds, wrong).scores.mse[0]


def test_crps_grid_runtime():
    mu, s, y = (np.array(c) for c in zip(*crps_grid()))
    t0 = time.perf_counter()
    gaussian_crps(mu, s, y)
    assert time.perf_counter() - t0 < 1.0
