import math
import warnings
from types import SimpleNamespace

import numpy as np
import pytest

from polysurf.bounds import (
    BOUNDS_HEADER,
    gamma_p_upper,
    general_upper,
    nazarov_upper,
    optimize_R,
    thm_upper,
)
from polysurf.extremal import TheoremRangeWarning, expected_surface_exact, solve_rho
from polysurf.measure import MeasureModel, ball, gaussian, power
from polysurf.numerics import RangeError


def fake_model(n, E, var):
    return SimpleNamespace(n=n, potential=SimpleNamespace(p=None),
                           params=SimpleNamespace(E=E, var_norm=var, t0=E, lambda_=0.1, V=0.1))


def test_header():
    assert BOUNDS_HEADER == ("bound_name", "family", "n", "p", "K", "value", "valid")


def test_general_upper_gaussian_limit():
    v = general_upper(MeasureModel(200, gaussian())).value
    assert v / 200 ** 0.25 == pytest.approx(2 ** 0.25, rel=0.10)


def test_general_upper_scaling():
    a = general_upper(fake_model(10, 3.0, 0.5)).value
    b = general_upper(fake_model(40, 6.0, 0.5)).value
    # sqrt(4) / sqrt(2)
    assert b / a == pytest.approx(math.sqrt(2), rel=1e-12)


@pytest.mark.parametrize("n", [50, 200, 800])
def test_general_upper_ball_is_order_n(n):
    # Var|X| ~ 1/n^2 and E|X| ~ 1 for the uniform ball
    assert general_upper(MeasureModel(n, ball())).value / n == pytest.approx(1.0, rel=0.05)


def test_general_upper_echoes_inputs():
    r = general_upper(MeasureModel(10, gaussian()))
    assert r.valid and r.inputs["n"] == 10 and "t0" in r.inputs


def test_thm_upper_boundary_log_factor():
    m = MeasureModel(10_000, gaussian())
    lam = m.params.lambda_
    K = math.exp(math.exp(-1) / lam)
    r = thm_upper(m, K)
    assert r.valid
    assert r.value == pytest.approx(math.sqrt(10_000) / m.params.t0 * math.sqrt(math.log(K)), rel=1e-12)


@pytest.mark.parametrize("model", [MeasureModel(50_000, gaussian()), MeasureModel(200, ball())])
def test_thm_upper_increasing_in_K(model):
    lam = model.params.lambda_
    assert lam <= 1e-2
    # sqrt(x) log(1/(lam x)) increases while lam x < e^-2 and turns over after
    Ks = np.exp(np.linspace(math.log(2), math.exp(-2) / lam, 200))
    vals = [thm_upper(model, K).value for K in Ks]
    assert all(thm_upper(model, K).valid for K in Ks)
    assert all(b > a for a, b in zip(vals, vals[1:]))
    past = [thm_upper(model, math.exp(x / lam)).value for x in (0.2, 0.3, math.exp(-1))]
    assert past[0] > past[1] > past[2]


def test_thm_upper_arithmetic_gaussian_1e4():
    m = MeasureModel(10_000, gaussian())
    p = m.params
    lk = math.log(16)
    ref = math.sqrt(10_000) / p.t0 * math.sqrt(lk) * math.log(1 / (p.lambda_ * lk))
    assert thm_upper(m, 16).value == pytest.approx(ref, rel=1e-14)


def test_thm_upper_invalid_range_still_reports():
    r = thm_upper(MeasureModel(50, gaussian()), 4096)
    assert not r.valid and math.isfinite(r.value)


def test_nazarov_values():
    assert nazarov_upper(math.e).value == pytest.approx(1.0)
    assert nazarov_upper(math.e ** 4).value == pytest.approx(2.0)


def test_nazarov_ratio_over_gaussian_sweep():
    # K up to 2^12 is far outside K <= exp(1/lambda) ~ 33 at n = 50; see README
    m = MeasureModel(50, gaussian())
    ratios = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TheoremRangeWarning)
        for K in (2 ** j for j in range(2, 13, 2)):
            ratios.append(expected_surface_exact(m, K, solve_rho(m, K)) / nazarov_upper(K).value)
    assert 0.2 <= min(ratios) and max(ratios) <= 4, ratios


@pytest.mark.parametrize("K", [2, 16, 4096])
def test_gamma_p_two_is_nazarov(K):
    assert gamma_p_upper(77, 2.0, K).value == nazarov_upper(K).value


def test_gamma_p_exponential_arithmetic():
    assert gamma_p_upper(100, 1.0, 64).value == pytest.approx(math.sqrt(math.log(64)) / 10)


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0, 4.0])
@pytest.mark.parametrize("n", [50, 100, 400])
def test_gamma_p_matches_t0_form(p, n):
    t0 = MeasureModel(n, power(p)).params.t0
    assert t0 == pytest.approx((n - 1) ** (1 / p), rel=1e-12)
    ratio = gamma_p_upper(n, p, 64).value / (math.sqrt(n) / t0 * math.sqrt(math.log(64)))
    assert 0.9 <= ratio <= 1.1


def test_gamma_p_rejects_bad_p():
    with pytest.raises(ValueError):
        gamma_p_upper(10, 0.5, 4)


def split(R, lam, K):
    return R * math.log(1 / (lam * R * R)) + K * math.exp(-R * R)


@pytest.mark.parametrize("lam", [1e-2, 1e-3, 1e-4])
@pytest.mark.parametrize("j", range(4, 13))
def test_optimize_R_window_and_minimality(lam, j):
    K = 2 ** j
    R, val = optimize_R(lam, K)
    hi = 1 / (math.e * math.sqrt(lam))
    assert 1.0 <= R <= hi
    assert val == pytest.approx(split(R, lam, K), rel=1e-12)
    r0 = math.sqrt(math.log(K))
    if 1.0 <= r0 <= hi:
        assert val <= split(r0, lam, K) + 1e-12
    ratio = val / (math.sqrt(math.log(K)) * math.log(1 / (lam * math.log(K))))
    assert 0.2 <= ratio <= 5


@pytest.mark.parametrize("lam,K", [(1e-3, 256), (1e-4, 4096)])
def test_optimize_R_near_balance(lam, K):
    R, _ = optimize_R(lam, K)
    assert K * math.exp(-R * R) <= R * math.log(1 / (lam * R * R)) + 1e-6
    grid = np.linspace(1.0, 1 / (math.e * math.sqrt(lam)), 200_001)
    obj = grid * np.log(1 / (lam * grid ** 2)) + K * np.exp(-grid ** 2)
    assert R == pytest.approx(grid[np.argmin(obj)], abs=1e-3)


def test_optimize_R_range_error():
    with pytest.raises(RangeError):
        optimize_R(0.2, 16)


@pytest.mark.parametrize("lam", [1e-2, 1e-3, 1e-4])
def test_optimize_R_near_log_scale(lam):
    j = 2
    while 2 ** j <= math.exp(1 / (16 * lam)) and j <= 40:
        K = 2 ** j
        r0 = math.sqrt(math.log(K))
        assert 0.5 * r0 <= optimize_R(lam, K)[0] <= 2 * r0
        j += 1


@pytest.mark.parametrize("n", [1000, 10_000])
def test_thm_upper_over_gaussian_extremal(n):
    m = MeasureModel(n, gaussian())
    for K in (2, 4, 16, 64, 256, 1024, 4096):
        bound = thm_upper(m, K)
        if not bound.valid:
            continue
        ratio = expected_surface_exact(m, K, solve_rho(m, K)) / bound.value
        assert 0.1 <= ratio <= 10
