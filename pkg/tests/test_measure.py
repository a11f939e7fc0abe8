import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from primegaps.measure import (
    density_cdf,
    density_quantile,
    g_moments,
    g_value,
    mc_concentration,
    mc_true_ratio,
    moments_table,
    product_ratio_lower_bound,
    sample_z,
    table_to_csv,
)


def exact_ratio_k2():
    """sum_l J_l / I for F = G(t1) G(t2) restricted to the simplex, by nested quadrature."""
    k = 2
    g2 = lambda t: float(g_value(k, t)) ** 2
    T = g_moments(k).cutoff
    inner = lambda t: integrate.quad(lambda s: float(g_value(k, s)), 0, min(max(1 - t, 0), T))[0]
    J = integrate.quad(lambda t: inner(t) ** 2 * g2(t), 0, T, limit=200)[0]
    I = integrate.quad(lambda t: g2(t) * integrate.quad(g2, 0, min(1 - t, T))[0], 0, T, limit=200)[0]
    return k * J / I


@pytest.mark.parametrize("k", [2, 50, 100, 1000, 10**4])
def test_normalization(k):
    prof = g_moments(k)
    assert abs(prof.norm - 1) <= 1e-10
    assert prof.cutoff == pytest.approx(k ** -0.75)
    assert float(g_value(k, prof.cutoff * 1.0001)) == 0.0


@pytest.mark.parametrize("k", [2, 100, 10**4])
def test_quadrature_matches_closed_form(k):
    prof = g_moments(k)
    assert prof.mu == pytest.approx(prof.mu_closed, rel=1e-9)
    assert prof.sigma2 == pytest.approx(prof.sigma2_closed, rel=1e-7)
    assert prof.integral_g == pytest.approx(prof.integral_g_closed, rel=1e-10)


def test_trends_on_grid():
    profs = [g_moments(k) for k in (100, 1000, 10**4)]
    ks2 = [p.k_sigma2 for p in profs]
    kg2 = [p.k_int_g_sq for p in profs]
    assert ks2[0] > ks2[1] > ks2[2]
    assert kg2[0] < kg2[1] < kg2[2]


@pytest.mark.parametrize("k", [3, 100])
def test_sampling_moments(k):
    prof = g_moments(k)
    z = sample_z(k, 400_000, seed=7)
    n = len(z)
    assert abs(z.mean() - prof.mu) < 4 * math.sqrt(prof.sigma2 / n)
    m4 = np.mean((z - prof.mu) ** 4)
    assert abs(z.var() - prof.sigma2) < 4 * math.sqrt((m4 - prof.sigma2**2) / n)
    assert z.max() < prof.cutoff


@pytest.mark.parametrize("k", [2, 54, 10**4])
def test_cdf_quantile_round_trip(k):
    u = np.linspace(0.01, 0.99, 99)
    assert np.max(np.abs(density_cdf(k, density_quantile(k, u)) - u)) < 1e-8


@settings(max_examples=50, deadline=None)
@given(k=st.integers(2, 10**5), u=st.floats(0.001, 0.999))
def test_cdf_matches_quadrature(k, u):
    t = float(density_quantile(k, u))
    q = integrate.quad(lambda s: float(g_value(k, s)) ** 2, 0, t, epsrel=1e-12)[0]
    assert q == pytest.approx(u, rel=1e-8)


def test_sampling_deterministic_and_seed_dependent():
    assert np.array_equal(sample_z(5, 1000, 1), sample_z(5, 1000, 1))
    assert not np.array_equal(sample_z(5, 1000, 1), sample_z(5, 1000, 2))


def test_concentration_infinite_threshold():
    est = mc_concentration(10, 10_000, math.inf, seed=0)
    assert est.estimate == 1.0 and est.radius == 0.0


def test_concentration_validation():
    with pytest.raises(ValueError):
        mc_concentration(10, 100, 0.5, seed=0)
    with pytest.raises(ValueError):
        mc_concentration(10, 10_000, 0.0, seed=0)


def test_concentration_trend():
    lo = mc_concentration(100, 20_000, 0.5, seed=1)
    hi = mc_concentration(10**4, 20_000, 0.5, seed=1)
    assert hi.estimate >= lo.estimate - 2 * lo.radius
    assert hi.estimate > 0.9


def test_true_ratio_matches_quadrature_k2():
    est = mc_true_ratio(2, 400_000, seed=3)
    assert abs(est.estimate - exact_ratio_k2()) < 2 * est.radius


@pytest.mark.parametrize("k", [2, 3])
def test_bound_below_true_ratio(k):
    rb = product_ratio_lower_bound(k, 200_000, seed=4)
    true = mc_true_ratio(k, 200_000, seed=5)
    assert rb.bound <= true.estimate + true.radius


def test_bound_seed_invariance():
    a = product_ratio_lower_bound(100, 50_000, seed=1)
    b = product_ratio_lower_bound(100, 50_000, seed=2)
    # the bound is a smooth function of two proportions; propagate their radii
    rad = a.bound * (a.p_half.radius / a.p_half.estimate + a.p_one.radius / a.p_one.estimate)
    assert abs(a.bound - b.bound) <= 3 * rad


def test_table_csv():
    rows = moments_table([50], 10_000, seed=0)
    text = table_to_csv(rows)
    assert text.splitlines()[0] == "k,mu,sigma2,bound,bound_over_log_k"
    assert text.splitlines()[1].startswith("50,")
    assert table_to_csv([]) == ""
