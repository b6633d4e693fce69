r"""Special functions and quadrature used by the outage-probability formulas.

Everything here is implemented from scratch on top of :mod:`math` and
:mod:`numpy`:

* :func:`bessel_i_scaled` -- :math:`e^{-z} I_\nu(z)` for integer :math:`\nu`,
* :func:`bessel_k` / :func:`bessel_k_scaled` -- :math:`K_0`, :math:`K_1`,
* :func:`marcum_q` / :func:`marcum_q_complement` -- generalized Marcum-Q,
* :func:`gauss_legendre` -- fixed-order Gauss-Legendre rules.

The Marcum-Q routines return *both* tails with relative accuracy, which is what
makes outage probabilities of order 1e-12 usable in a ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from odokit.errors import DomainError, QuadratureError

EULER_GAMMA = 0.57721566490153286061

_SERIES_EPS = 1e-17
_ASYMPTOTIC_MIN_Z = 30.0
_K_SERIES_MAX_Z = 2.0
_K_ASYMPTOTIC_MIN_Z = 20.0
_K_TRAPEZOID_STEP = 0.05
_MARCUM_MAX_TERMS = 10_000


def _as_float_array(z):
    arr = np.asarray(z, dtype=float)
    return arr, arr.ndim == 0


def _check_order(nu):
    if isinstance(nu, bool) or int(nu) != nu or nu < 0:
        raise DomainError(f"order must be a non-negative integer, got {nu!r}")
    return int(nu)


# ---------------------------------------------------------------------------
# Modified Bessel function of the first kind
# ---------------------------------------------------------------------------

def _i_scaled_series(nu, z):
    """Power series for e^{-z} I_nu(z), rescaled to survive large z."""
    half = 0.5 * z
    q = half * half
    with np.errstate(divide="ignore", invalid="ignore"):
        log_t0 = nu * np.log(half) - math.lgamma(nu + 1) - z
    term = np.ones_like(z)
    total = np.ones_like(z)
    log_offset = np.zeros_like(z)
    k = 0
    while True:
        k += 1
        term = term * q / (k * (k + nu))
        total = total + term
        big = total > 1e200
        if big.any():
            total = np.where(big, total * 1e-200, total)
            term = np.where(big, term * 1e-200, term)
            log_offset = np.where(big, log_offset + 200.0 * math.log(10.0), log_offset)
        if k > 0.5 * z.max() and np.all(term <= _SERIES_EPS * total):
            break
    with np.errstate(divide="ignore"):
        out = np.exp(log_t0 + log_offset + np.log(total))
    if nu == 0:
        out = np.where(z == 0.0, 1.0, out)
    return out


def _i_scaled_asymptotic(nu, z):
    """Hankel expansion of e^{-z} I_nu(z); only called where it converges."""
    mu = 4.0 * nu * nu
    term = np.ones_like(z)
    total = np.ones_like(z)
    k = 0
    while True:
        k += 1
        term = -term * (mu - (2 * k - 1) ** 2) / (8.0 * k * z)
        total = total + term
        if np.all(np.abs(term) <= _SERIES_EPS * np.abs(total)):
            break
        if k > 200:
            raise ArithmeticError("asymptotic Bessel-I expansion failed to converge")
    return total / np.sqrt(2.0 * math.pi * z)


def bessel_i_scaled(nu, z):
    r"""Exponentially scaled modified Bessel function :math:`e^{-z} I_\nu(z)`.

    Parameters
    ----------
    nu : int
        Non-negative integer order.
    z : float or array_like
        Non-negative argument.

    Returns
    -------
    float or ndarray
        Same shape as ``z``.
    """
    nu = _check_order(nu)
    z, scalar = _as_float_array(z)
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise DomainError("bessel_i_scaled requires z >= 0")
    flat = np.atleast_1d(z).ravel()
    out = np.empty_like(flat)
    use_asym = (flat > _ASYMPTOTIC_MIN_Z) & (flat > 2.0 * nu * nu)
    if use_asym.any():
        out[use_asym] = _i_scaled_asymptotic(nu, flat[use_asym])
    if (~use_asym).any():
        out[~use_asym] = _i_scaled_series(nu, flat[~use_asym])
    out = out.reshape(np.shape(z))
    return float(out) if scalar else out


def log_bessel_i_power_ratio(nu, u):
    r"""``log( I_nu(2 sqrt(u)) / u**(nu/2) )`` for ``u >= 0``.

    The ratio is an entire function of ``u`` equal to
    :math:`\sum_k u^k / (k!(k+\nu)!)`, so it stays finite at ``u = 0`` where the
    two factors separately vanish or blow up.
    """
    nu = _check_order(nu)
    u, scalar = _as_float_array(u)
    if np.any(u < 0):
        raise DomainError("log_bessel_i_power_ratio requires u >= 0")
    flat = np.atleast_1d(u).ravel()
    out = np.empty_like(flat)
    small = flat <= 1.0
    if small.any():
        us = flat[small]
        term = np.full_like(us, 1.0 / math.factorial(nu))
        total = term.copy()
        k = 0
        while True:
            k += 1
            term = term * us / (k * (k + nu))
            total = total + term
            if np.all(term <= _SERIES_EPS * total):
                break
        out[small] = np.log(total)
    if (~small).any():
        ul = flat[~small]
        z = 2.0 * np.sqrt(ul)
        out[~small] = np.log(bessel_i_scaled(nu, z)) + z - 0.5 * nu * np.log(ul)
    out = out.reshape(np.shape(u))
    return float(out) if scalar else out


# ---------------------------------------------------------------------------
# Modified Bessel function of the second kind, orders 0 and 1
# ---------------------------------------------------------------------------

def _k_series(nu, z):
    # Small-argument expansions; z <= 2.
    u = 0.25 * z * z
    log_half = np.log(0.5 * z)
    if nu == 0:
        term = np.ones_like(z)  # u^k / (k!)^2
        i0 = term.copy()
        acc = np.zeros_like(z)  # sum H_k u^k / (k!)^2
        harmonic = 0.0
        for k in range(1, 60):
            term = term * u / (k * k)
            harmonic += 1.0 / k
            i0 += term
            acc += harmonic * term
        return -(log_half + EULER_GAMMA) * i0 + acc
    # nu == 1
    term = np.ones_like(z)  # u^k / (k!(k+1)!)
    psi_k1 = -EULER_GAMMA  # psi(k+1)
    acc = (psi_k1 + psi_k1 + 1.0) * term
    i1_sum = term.copy()
    for k in range(1, 60):
        term = term * u / (k * (k + 1))
        psi_k1 += 1.0 / k
        acc += (psi_k1 + psi_k1 + 1.0 / (k + 1)) * term
        i1_sum += term
    i1 = 0.5 * z * i1_sum
    return 1.0 / z + log_half * i1 - 0.25 * z * acc


def _k_scaled_trapezoid(nu, z):
    # e^z K_nu(z) = int_0^inf exp(-z (cosh t - 1)) cosh(nu t) dt; the
    # trapezoid rule converges geometrically for this analytic integrand.
    h = _K_TRAPEZOID_STEP
    t_max = math.acosh(1.0 + 45.0 / float(z.min()))
    t = np.arange(1, int(t_max / h) + 2) * h
    expo = np.exp(-np.outer(z, np.cosh(t) - 1.0))
    if nu:
        expo = expo * np.cosh(nu * t)
    return h * (0.5 + expo.sum(axis=1))


def _k_scaled_asymptotic(nu, z):
    mu = 4.0 * nu * nu
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(1, 80):
        term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * z)
        total = total + term
        if np.all(np.abs(term) <= _SERIES_EPS * np.abs(total)):
            break
    return total * np.sqrt(0.5 * math.pi / z)


def bessel_k_scaled(nu, z):
    r""":math:`e^{z} K_\nu(z)` for ``nu`` in {0, 1} and ``z > 0``."""
    if nu not in (0, 1):
        raise DomainError("bessel_k supports orders 0 and 1 only")
    z, scalar = _as_float_array(z)
    if np.any(~(z > 0)):
        raise DomainError("bessel_k requires z > 0")
    flat = np.atleast_1d(z).ravel()
    out = np.empty_like(flat)
    small = flat <= _K_SERIES_MAX_Z
    large = flat > _K_ASYMPTOTIC_MIN_Z
    mid = ~small & ~large
    if small.any():
        out[small] = _k_series(nu, flat[small]) * np.exp(flat[small])
    if mid.any():
        out[mid] = _k_scaled_trapezoid(nu, flat[mid])
    if large.any():
        out[large] = _k_scaled_asymptotic(nu, flat[large])
    out = out.reshape(np.shape(z))
    return float(out) if scalar else out


def bessel_k(nu, z):
    r"""Modified Bessel function of the second kind :math:`K_\nu(z)`, ``nu`` in {0, 1}."""
    if nu not in (0, 1):
        raise DomainError("bessel_k supports orders 0 and 1 only")
    z_arr, scalar = _as_float_array(z)
    if np.any(~(z_arr > 0)):
        raise DomainError("bessel_k requires z > 0")
    flat = np.atleast_1d(z_arr).ravel()
    out = np.empty_like(flat)
    small = flat <= _K_SERIES_MAX_Z
    if small.any():
        out[small] = _k_series(nu, flat[small])
    if (~small).any():
        out[~small] = bessel_k_scaled(nu, flat[~small]) * np.exp(-flat[~small])
    out = out.reshape(np.shape(z_arr))
    return float(out) if scalar else out


def one_minus_z_k1(z):
    r""":math:`1 - z K_1(z)` without cancellation as :math:`z \to 0^+`.

    With :math:`u = z^2/4` the small-argument expansion collapses to
    :math:`u \sum_k [\psi(k+1) + \psi(k+2) - \ln u]\, u^k / (k!(k+1)!)`.
    """
    z, scalar = _as_float_array(z)
    if np.any(~(z > 0)):
        raise DomainError("one_minus_z_k1 requires z > 0")
    flat = np.atleast_1d(z).ravel()
    out = np.empty_like(flat)
    small = flat <= _K_SERIES_MAX_Z
    if small.any():
        u = 0.25 * flat[small] ** 2
        log_u = np.log(u)
        term = np.ones_like(u)
        psi_k1 = -EULER_GAMMA
        acc = (2.0 * psi_k1 + 1.0 - log_u) * term
        for k in range(1, 60):
            term = term * u / (k * (k + 1))
            psi_k1 += 1.0 / k
            acc += (2.0 * psi_k1 + 1.0 / (k + 1) - log_u) * term
        out[small] = u * acc
    if (~small).any():
        zl = flat[~small]
        out[~small] = 1.0 - zl * bessel_k(1, zl)
    out = out.reshape(np.shape(z))
    return float(out) if scalar else out


# ---------------------------------------------------------------------------
# Generalized Marcum-Q
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _log_factorials(n):
    table = np.array([math.lgamma(k + 1.0) for k in range(n)])
    table.flags.writeable = False
    return table


def _poisson_pmf(lam, n):
    """Poisson(lam) probabilities for k = 0..n-1 as an array (lam may be a column)."""
    lam = np.asarray(lam, dtype=float)
    k = np.arange(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_p = -lam[..., None] + k * np.log(lam)[..., None] - _log_factorials(n)
    p = np.exp(log_p)
    zero = lam == 0
    if np.any(zero):
        p[zero] = 0.0
        p[zero, 0] = 1.0
    return p


def _marcum_tails(order, lam, x):
    """Return (Q, 1 - Q) for half-squared arguments lam = a^2/2, x = b^2/2.

    Q_N = sum_k Pois(k; lam) * PoisCDF(N + k - 1; x)
    1 - Q_N = sum_{j >= N} Pois(j; x) * PoisCDF(j - N; lam)

    Both sums have positive terms only, so each tail is obtained to full
    relative precision; the smaller one is kept and the other is its
    complement.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    span = max(x, float(lam.max()) + order)
    n_terms = int(math.ceil(span + 12.0 * math.sqrt(span) + 60.0)) + order
    while True:
        if n_terms > _MARCUM_MAX_TERMS:
            raise ArithmeticError(
                f"Marcum-Q series needs more than {_MARCUM_MAX_TERMS} terms"
            )
        p_lam = _poisson_pmf(lam, n_terms)
        p_x = _poisson_pmf(np.array(x), n_terms)
        cdf_lam = np.cumsum(p_lam, axis=1)
        cdf_x = np.cumsum(p_x)
        q_terms = p_lam[:, : n_terms - order + 1] * cdf_x[order - 1 :]
        p_terms = p_x[order:] * cdf_lam[:, : n_terms - order]
        s_q = q_terms.sum(axis=1)
        s_p = p_terms.sum(axis=1)
        tail_ok = np.all(q_terms[:, -1] <= _SERIES_EPS * s_q) and np.all(
            p_terms[:, -1] <= _SERIES_EPS * np.maximum(s_p, 1e-300)
        )
        if tail_ok:
            break
        n_terms *= 2
    q = np.where(s_q <= s_p, s_q, 1.0 - s_p)
    p = np.where(s_q <= s_p, 1.0 - s_q, s_p)
    return np.clip(q, 0.0, 1.0), np.clip(p, 0.0, 1.0)


def _marcum_args(order, a, b):
    if isinstance(order, bool) or int(order) != order or order < 1:
        raise DomainError(f"Marcum-Q order must be a positive integer, got {order!r}")
    a_arr, scalar = _as_float_array(a)
    b = float(b)
    if np.any(a_arr < 0) or b < 0 or np.any(np.isnan(a_arr)) or math.isnan(b):
        raise DomainError("Marcum-Q requires a >= 0 and b >= 0")
    return int(order), a_arr, b, scalar


def marcum_q(order, a, b):
    r"""Generalized Marcum-Q function :math:`Q_N(a, b)`.

    ``a`` may be an array (``b`` is a scalar); the result then has the shape
    of ``a``.
    """
    order, a_arr, b, scalar = _marcum_args(order, a, b)
    if b == 0.0:
        out = np.ones_like(a_arr)
    else:
        out, _ = _marcum_tails(order, 0.5 * a_arr.ravel() ** 2, 0.5 * b * b)
        out = out.reshape(a_arr.shape)
    return float(out) if scalar else out


def marcum_q_complement(order, a, b):
    r""":math:`1 - Q_N(a, b)`, accurate even when it is tiny."""
    order, a_arr, b, scalar = _marcum_args(order, a, b)
    if b == 0.0:
        out = np.zeros_like(a_arr)
    else:
        _, out = _marcum_tails(order, 0.5 * a_arr.ravel() ** 2, 0.5 * b * b)
        out = out.reshape(a_arr.shape)
    return float(out) if scalar else out


# ---------------------------------------------------------------------------
# Gauss-Legendre quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights of an ``order``-point rule on [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def mapped(self, lo, hi):
        """Nodes and weights transplanted onto ``[lo, hi]``."""
        half = 0.5 * (hi - lo)
        return lo + half * (self.nodes + 1.0), half * self.weights

    def integrate(self, func, lo, hi):
        x, w = self.mapped(lo, hi)
        return float(np.dot(w, func(x)))


def _frozen(arr):
    arr.flags.writeable = False
    return arr


def _legendre_with_derivative(n, x):
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    return p1, n * (x * p1 - p0) / (x * x - 1.0)


@lru_cache(maxsize=None)
def gauss_legendre(order):
    """Gauss-Legendre rule of the given order (1 <= order <= 512).

    Roots of P_n are found by Newton iteration from the Tricomi initial guess;
    only the non-negative half is computed and mirrored, so the rule is exactly
    symmetric.
    """
    if isinstance(order, bool) or int(order) != order or not 1 <= order <= 512:
        raise DomainError(f"quadrature order must be in [1, 512], got {order!r}")
    n = int(order)
    if n == 1:
        return QuadratureRule(
            nodes=_frozen(np.zeros(1)), weights=_frozen(np.array([2.0])), order=1
        )
    m = (n + 1) // 2
    i = np.arange(1, m + 1)
    x = np.cos(math.pi * (i - 0.25) / (n + 0.5))
    for _ in range(100):
        p1, dp = _legendre_with_derivative(n, x)
        step = p1 / dp
        x = x - step
        if np.all(np.abs(step) < 1e-16):
            break
    else:
        raise QuadratureError(f"Legendre root iteration did not converge (n={n})")
    _, dp = _legendre_with_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    if n % 2:
        x[-1] = 0.0
    # roots come out in decreasing order; mirror the positive half
    pos_x, pos_w = x[::-1], w[::-1]
    if n % 2:
        nodes = np.concatenate([-pos_x[1:][::-1], pos_x])
        weights = np.concatenate([pos_w[1:][::-1], pos_w])
    else:
        nodes = np.concatenate([-pos_x[::-1], pos_x])
        weights = np.concatenate([pos_w[::-1], pos_w])
    return QuadratureRule(nodes=_frozen(nodes), weights=_frozen(weights), order=n)
