import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from odokit import specfun
from odokit.errors import DomainError

mp.mp.dps = 50


def mp_marcum_cdf(order, a, b):
    """1 - Q_N(a, b) as a Poisson mixture of regularized lower gammas."""
    lam = mp.mpf(a) ** 2 / 2
    x = mp.mpf(b) ** 2 / 2
    total = mp.mpf(0)
    j = 0
    while True:
        term = mp.exp(-lam) * lam**j / mp.factorial(j) * mp.gammainc(order + j, 0, x, regularized=True)
        total += term
        if j > lam and term < mp.mpf(10) ** -45:
            break
        j += 1
    return total


# ---------------------------------------------------------------------------
# Bessel functions
# ---------------------------------------------------------------------------

Z_GRID = [1e-8, 1e-3, 0.1, 0.5, 1.0, 2.0, 3.7, 8.0, 15.0, 29.0, 31.0, 60.0, 150.0, 700.0]


@pytest.mark.parametrize("nu", [0, 1, 2, 3, 7])
@pytest.mark.parametrize("z", Z_GRID)
def test_bessel_i_scaled_matches_mpmath(nu, z):
    want = float(mp.besseli(nu, z) * mp.exp(-z))
    got = specfun.bessel_i_scaled(nu, z)
    assert got == pytest.approx(want, rel=1e-13, abs=1e-300)


def test_bessel_i_scaled_at_zero():
    assert specfun.bessel_i_scaled(0, 0.0) == 1.0
    assert specfun.bessel_i_scaled(3, 0.0) == 0.0


def test_bessel_i_scaled_vectorized_matches_scipy():
    z = np.logspace(-5, 3, 200)
    for nu in (0, 1, 4):
        np.testing.assert_allclose(specfun.bessel_i_scaled(nu, z), special.ive(nu, z), rtol=1e-12)


@pytest.mark.parametrize("nu", [0, 1])
@pytest.mark.parametrize("z", [1e-6, 0.01, 0.5, 1.9, 2.0, 2.1, 5.0, 12.0, 19.9, 20.1, 50.0, 400.0])
def test_bessel_k_matches_mpmath(nu, z):
    want = mp.besselk(nu, z)
    assert specfun.bessel_k(nu, z) == pytest.approx(float(want), rel=1e-14, abs=1e-300)
    assert specfun.bessel_k_scaled(nu, z) == pytest.approx(float(want * mp.exp(z)), rel=1e-14)


def test_bessel_k_vectorized_matches_scipy():
    z = np.logspace(-4, 2.5, 300)
    for nu in (0, 1):
        np.testing.assert_allclose(specfun.bessel_k_scaled(nu, z), special.kve(nu, z), rtol=1e-13)


@given(st.floats(min_value=1e-3, max_value=300.0))
@settings(max_examples=100, deadline=None)
def test_bessel_wronskian(z):
    lhs = specfun.bessel_i_scaled(0, z) * specfun.bessel_k_scaled(1, z) + specfun.bessel_i_scaled(
        1, z
    ) * specfun.bessel_k_scaled(0, z)
    assert lhs * z == pytest.approx(1.0, rel=1e-13)


@pytest.mark.parametrize("z", [1e-9, 1e-6, 1e-3, 0.05, 0.5, 1.0, 2.0, 3.0, 6.0, 20.0, 40.0])
def test_one_minus_z_k1_is_cancellation_free(z):
    want = 1 - mp.mpf(z) * mp.besselk(1, z)
    assert specfun.one_minus_z_k1(z) == pytest.approx(float(want), rel=1e-14)


@pytest.mark.parametrize("nu", [0, 1, 3, 6])
@pytest.mark.parametrize("u", [0.0, 1e-12, 1e-4, 0.3, 2.0, 40.0, 900.0, 1e5])
def test_log_bessel_i_power_ratio(nu, u):
    if u == 0.0:
        want = -math.lgamma(nu + 1)
    else:
        want = float(mp.log(mp.besseli(nu, 2 * mp.sqrt(u)) / mp.mpf(u) ** (mp.mpf(nu) / 2)))
    got = specfun.log_bessel_i_power_ratio(nu, u)
    assert got == pytest.approx(want, rel=1e-13, abs=1e-14)


def test_bessel_domain_errors():
    with pytest.raises(DomainError):
        specfun.bessel_i_scaled(0, -1.0)
    with pytest.raises(DomainError):
        specfun.bessel_i_scaled(-1, 1.0)
    with pytest.raises(DomainError):
        specfun.bessel_k(0, 0.0)
    with pytest.raises(DomainError):
        specfun.bessel_k(2, 1.0)
    with pytest.raises(DomainError):
        specfun.one_minus_z_k1(-0.5)


# ---------------------------------------------------------------------------
# Marcum Q
# ---------------------------------------------------------------------------

MARCUM_CASES = [
    (1, 0.0, 1.0),
    (1, 1.0, 0.5),
    (1, 3.0, 3.0),
    (1, 5.4, 1.2),
    (2, 2.0, 4.0),
    (4, 8.9, 2.0),
    (4, 0.5, 0.1),
    (4, 12.0, 14.0),
    (3, 20.0, 26.0),
    (1, 0.2, 9.0),
]


@pytest.mark.parametrize("order,a,b", MARCUM_CASES)
def test_marcum_q_against_series_oracle(order, a, b):
    cdf = mp_marcum_cdf(order, a, b)
    assert specfun.marcum_q(order, a, b) == pytest.approx(float(1 - cdf), rel=1e-12, abs=1e-15)
    assert specfun.marcum_q_complement(order, a, b) == pytest.approx(float(cdf), rel=1e-12, abs=1e-300)


def test_marcum_q_agrees_with_noncentral_chi2():
    for order, a, b in MARCUM_CASES:
        want = stats.ncx2.sf(b * b, 2 * order, a * a)
        assert specfun.marcum_q(order, a, b) == pytest.approx(want, abs=1e-12)


def test_marcum_q_deep_lower_tail_keeps_relative_precision():
    # the complement here is ~1e-30; a naive 1 - Q would return 0
    order, a, b = 4, 8.0, 0.05
    want = mp_marcum_cdf(order, a, b)
    assert float(want) < 1e-20
    assert specfun.marcum_q_complement(order, a, b) == pytest.approx(float(want), rel=1e-12)


def test_marcum_q_boundaries():
    assert specfun.marcum_q(2, 3.0, 0.0) == 1.0
    assert specfun.marcum_q_complement(2, 3.0, 0.0) == 0.0
    # Q_1(0, b) = exp(-b^2/2)
    assert specfun.marcum_q(1, 0.0, 1.7) == pytest.approx(math.exp(-1.7**2 / 2), rel=1e-14)


def test_marcum_q_vectorized_in_a():
    a = np.array([0.0, 1.0, 4.0])
    got = specfun.marcum_q(2, a, 2.5)
    assert got.shape == (3,)
    for ai, gi in zip(a, got):
        assert gi == specfun.marcum_q(2, float(ai), 2.5)


@given(
    st.integers(min_value=1, max_value=6),
    st.floats(min_value=0.0, max_value=15.0),
    st.floats(min_value=0.0, max_value=15.0),
)
@settings(max_examples=150, deadline=None)
def test_marcum_q_complement_sums_to_one(order, a, b):
    q = specfun.marcum_q(order, a, b)
    p = specfun.marcum_q_complement(order, a, b)
    assert 0.0 <= q <= 1.0 and 0.0 <= p <= 1.0
    assert q + p == pytest.approx(1.0, abs=1e-14)


@given(st.integers(1, 4), st.floats(0.0, 10.0), st.floats(0.01, 10.0), st.floats(0.01, 3.0))
@settings(max_examples=100, deadline=None)
def test_marcum_q_monotone(order, a, b, step):
    assert specfun.marcum_q(order, a, b + step) <= specfun.marcum_q(order, a, b) + 1e-15
    assert specfun.marcum_q(order, a + step, b) >= specfun.marcum_q(order, a, b) - 1e-15
    assert specfun.marcum_q(order + 1, a, b) >= specfun.marcum_q(order, a, b) - 1e-15


def test_marcum_domain_errors():
    with pytest.raises(DomainError):
        specfun.marcum_q(0, 1.0, 1.0)
    with pytest.raises(DomainError):
        specfun.marcum_q(1, -1.0, 1.0)
    with pytest.raises(DomainError):
        specfun.marcum_q_complement(1, 1.0, -1.0)


# ---------------------------------------------------------------------------
# Gauss-Legendre
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3, 5, 16, 64, 128, 256, 512])
def test_gauss_legendre_matches_numpy(n):
    rule = specfun.gauss_legendre(n)
    nodes, weights = np.polynomial.legendre.leggauss(n)
    np.testing.assert_allclose(rule.nodes, nodes, atol=1e-14)
    # numpy's own weights drift to ~1e-10 relative at high order
    np.testing.assert_allclose(rule.weights, weights, rtol=1e-9, atol=1e-15)
    assert rule.weights.sum() == pytest.approx(2.0, abs=1e-13)


@pytest.mark.parametrize("n", [7, 64, 256])
def test_gauss_legendre_weights_against_mpmath(n):
    rule = specfun.gauss_legendre(n)
    for i in range(0, n, max(1, n // 16)):
        x = mp.findroot(lambda t: mp.legendre(n, t), mp.mpf(rule.nodes[i]), verify=False)
        dp = mp.diff(lambda t: mp.legendre(n, t), x)
        assert rule.nodes[i] == pytest.approx(float(x), abs=1e-15)
        assert rule.weights[i] == pytest.approx(float(2 / ((1 - x * x) * dp**2)), rel=1e-12)


def test_gauss_legendre_rule_is_immutable_and_cached():
    rule = specfun.gauss_legendre(32)
    assert specfun.gauss_legendre(32) is rule
    with pytest.raises(ValueError):
        rule.nodes[0] = 0.0


@given(st.integers(1, 40), st.data())
@settings(max_examples=60, deadline=None)
def test_gauss_legendre_exact_for_degree_2n_minus_1(n, data):
    coeffs = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=2 * n, max_size=2 * n)))
    poly = np.polynomial.Polynomial(coeffs)
    lo = data.draw(st.floats(-2, 0))
    hi = lo + data.draw(st.floats(0.1, 3))
    antider = poly.integ()
    want = antider(hi) - antider(lo)
    got = specfun.gauss_legendre(n).integrate(poly, lo, hi)
    scale = np.abs(coeffs).sum() * max(1.0, abs(lo), abs(hi)) ** (2 * n) * (hi - lo)
    assert abs(got - want) <= 1e-12 * max(scale, 1.0)


def test_gauss_legendre_order_bounds():
    with pytest.raises(DomainError):
        specfun.gauss_legendre(0)
    with pytest.raises(DomainError):
        specfun.gauss_legendre(513)
