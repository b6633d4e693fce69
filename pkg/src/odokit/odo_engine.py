r"""Operational diversity order (ODO) of fading channels.

At an operating average power :math:`\Omega_0` the outage probability
:math:`P_{op}(\Omega) = F_g(W_{th}/\Omega)` is replaced by its tangent in
log-log coordinates,

.. math::

    P_{op}(\Omega) \approx \alpha_0 (\Omega_0/\Omega)^\delta,\qquad
    \alpha_0 = F_g(x_0),\quad \delta = x_0 f_g(x_0) / F_g(x_0),

with :math:`x_0 = W_{th}/\Omega_0`.  :func:`odo_generic` evaluates this for any
PDF/CDF pair; the ``odo_*`` functions are closed forms for specific channels,
evaluated in the log domain so large K-factors and SNRs neither overflow nor
underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from odokit import specfun
from odokit.channels import (
    FadingModel,
    GainDistribution,
    gain_distribution,
    twdp_kappa,
    twdp_theta_integral,
)
from odokit.errors import DomainError, NumericRangeError

DEFAULT_RATE = 1.7
# below this the OP is treated as underflowed
MIN_OUTAGE = 1e-300
# half-width of the central difference; truncation error ~ h^2 |d3 log F| stays
# below 1e-7 relative for the supported models while rounding stays near 1e-9
DERIVATIVE_STEP_DB = 1e-5


@dataclass(frozen=True)
class OperatingPoint:
    """Rate ``R`` (bits/s/Hz) and operating power ``omega0_db`` (dB over N0 = 1)."""

    R: float
    omega0_db: float

    def __post_init__(self):
        if not (self.R > 0 and math.isfinite(self.R)):
            raise DomainError(f"rate must be positive, got {self.R!r}")
        if not math.isfinite(self.omega0_db):
            raise DomainError("omega0_db must be finite")

    @property
    def W_th(self) -> float:
        return math.expm1(self.R * math.log(2.0))

    @property
    def omega0_lin(self) -> float:
        try:
            return 10.0 ** (self.omega0_db / 10.0)
        except OverflowError:
            raise NumericRangeError(f"omega0 = {self.omega0_db} dB overflows a double") from None

    @property
    def x0(self) -> float:
        """Normalized threshold W_th / Omega_0 at which the gain CDF is read."""
        try:
            return self.W_th * 10.0 ** (-self.omega0_db / 10.0)
        except OverflowError:
            raise NumericRangeError(f"omega0 = {self.omega0_db} dB overflows a double") from None


@dataclass(frozen=True)
class OdoResult:
    delta: float
    alpha0: float

    @property
    def c_db_per_decade(self) -> float:
        return 10.0 / self.delta


@dataclass(frozen=True)
class TangentLine:
    """log10 P_op as a straight line in Omega^dB touching the OP curve at the anchor."""

    slope_per_db: float
    anchor_db: float
    anchor_logop: float

    def log10_op(self, omega_db):
        return self.anchor_logop + self.slope_per_db * (np.asarray(omega_db) - self.anchor_db)

    def op(self, omega_db):
        return 10.0 ** self.log10_op(omega_db)

    def op_at_factor(self, c: float) -> float:
        """Predicted OP at Omega = c * Omega_0, i.e. alpha0 * c**(-delta)."""
        delta = -10.0 * self.slope_per_db
        return 10.0 ** self.anchor_logop * c ** (-delta)


@dataclass(frozen=True)
class AsymptoticLaw:
    """High-SNR power law F_g(x) ~ alpha x^b; ``representable`` is False when
    no such law exists."""

    alpha: float
    b: float
    representable: bool = True

    def cdf(self, x):
        if not self.representable:
            raise DomainError("no power-law asymptote for this model")
        return self.alpha * np.asarray(x) ** self.b


def _result(delta, alpha0):
    _outage(alpha0)
    if not math.isfinite(delta) or delta <= 0:
        # deep in the low-SNR regime the slope itself underflows
        raise NumericRangeError(f"ODO {delta:.3g} is out of the numeric range at this operating point")
    # quadrature and rounding can leave the CDF an ulp above one
    return OdoResult(delta=float(delta), alpha0=min(float(alpha0), 1.0))


def _outage(alpha0):
    if not alpha0 > MIN_OUTAGE:
        raise NumericRangeError(
            f"outage probability {alpha0:.3g} is out of the numeric range at this operating point"
        )


# ---------------------------------------------------------------------------
# generic engine
# ---------------------------------------------------------------------------

def odo_generic(dist: GainDistribution, op: OperatingPoint) -> OdoResult:
    """ODO from any PDF/CDF pair: delta = x0 f(x0) / F(x0)."""
    x = op.x0
    F = float(dist.cdf(x))
    _outage(F)
    return _result(x * float(dist.pdf(x)) / F, F)


def odo_by_numerical_derivative(dist: GainDistribution, op: OperatingPoint, h_db: float = DERIVATIVE_STEP_DB) -> float:
    """-10 d(log10 P_op)/d(Omega^dB) by a central difference of width 2*h_db."""
    if not 0 < h_db <= 0.5:
        raise DomainError("h_db must lie in (0, 0.5]")
    lo = OperatingPoint(op.R, op.omega0_db - h_db)
    hi = OperatingPoint(op.R, op.omega0_db + h_db)
    logs = []
    for point in (lo, hi):
        F = float(dist.cdf(point.x0))
        _outage(F)
        logs.append(dist.log_cdf(point.x0) if hasattr(dist, "log_cdf") else math.log(F))
    return -10.0 * (logs[1] - logs[0]) / (2.0 * h_db * math.log(10.0))


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def odo_rayleigh(op: OperatingPoint) -> OdoResult:
    x = op.x0
    alpha0 = -math.expm1(-x)
    _outage(alpha0)
    # x e^{-x} / (1 - e^{-x}) = x / (e^x - 1)
    if x > 700.0:
        return _result(math.exp(math.log(x) - x), alpha0)
    return _result(x / math.expm1(x), alpha0)


def odo_rice(K: float, op: OperatingPoint) -> OdoResult:
    """Rician closed form with the Bessel and Marcum-Q factors in log domain."""
    if not K >= 0:
        raise DomainError("K must be >= 0")
    x = op.x0
    alpha0 = specfun.marcum_q_complement(1, math.sqrt(2.0 * K), math.sqrt(2.0 * (1.0 + K) * x))
    _outage(alpha0)
    z = 2.0 * math.sqrt(K * (1.0 + K) * x)
    log_num = (
        math.log(x)
        + math.log1p(K)
        - K
        - (1.0 + K) * x
        + z
        + math.log(specfun.bessel_i_scaled(0, z))
    )
    return _result(math.exp(log_num - math.log(alpha0)), alpha0)


def odo_mrc_rice(K: float, N: int, op: OperatingPoint) -> OdoResult:
    """N-branch MRC over i.i.d. Rician branches.

    The numerator is x0 * A * I_{N-1}(2 sqrt(N K (1+K) x0)) with
    A = (1+K)^{(N+1)/2} x0^{(N-1)/2} (N K)^{-(N-1)/2} e^{-NK-(1+K)x0}; for
    small Bessel arguments the K powers are cancelled analytically through
    the regular series of I_{N-1}(2 sqrt(u)) / u^{(N-1)/2}.
    """
    if not K >= 0:
        raise DomainError("K must be >= 0")
    if isinstance(N, bool) or int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    N = int(N)
    x = op.x0
    alpha0 = specfun.marcum_q_complement(
        N, math.sqrt(2.0 * K * N), math.sqrt(2.0 * (1.0 + K) * x)
    )
    _outage(alpha0)
    u = N * K * (1.0 + K) * x
    if u < 1e-8:
        log_a_bessel = (
            math.log1p(K) * N
            + (N - 1) * math.log(x)
            + specfun.log_bessel_i_power_ratio(N - 1, u)
        )
    else:
        z = 2.0 * math.sqrt(u)
        log_a_bessel = (
            0.5 * (N + 1) * math.log1p(K)
            + 0.5 * (N - 1) * (math.log(x) - math.log(N * K))
            + z
            + math.log(specfun.bessel_i_scaled(N - 1, z))
        )
    log_num = math.log(x) + log_a_bessel - N * K - (1.0 + K) * x
    return _result(math.exp(log_num - math.log(alpha0)), alpha0)


def odo_sc(base: OdoResult, N: int) -> OdoResult:
    """Selection combining over N i.i.d. branches multiplies the ODO by N."""
    if isinstance(N, bool) or int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    return _result(N * base.delta, base.alpha0 ** N)


def odo_twdp(K: float, delta_param: float, op: OperatingPoint) -> OdoResult:
    """TWDP closed form: numerator and denominator are phase averages taken
    with the same auto-refined Gauss-Legendre rule."""
    if not K >= 0 or not 0.0 <= delta_param <= 1.0:
        raise DomainError("TWDP needs K >= 0 and delta in [0, 1]")
    xi_w = (K + 1.0) * op.x0  # xi_0 * W_th

    def integrand(theta):
        kappa = twdp_kappa(K, delta_param, theta)
        z = 2.0 * np.sqrt(kappa * xi_w)
        # e^{-kappa - xi W} I0(z) = e^{-(sqrt(kappa) - sqrt(xi W))^2} * e^{-z} I0(z)
        num = np.exp(-((np.sqrt(kappa) - math.sqrt(xi_w)) ** 2)) * specfun.bessel_i_scaled(0, z)
        den = specfun.marcum_q_complement(1, np.sqrt(2.0 * kappa), math.sqrt(2.0 * xi_w))
        return np.stack([num, den], axis=1)

    num, alpha0 = twdp_theta_integral(integrand)
    _outage(alpha0)
    return _result(xi_w * num / alpha0, alpha0)


def odo_cascaded(op: OperatingPoint) -> OdoResult:
    """Product of two Rayleigh gains: delta = x 2K0(2 sqrt x) / (1 - 2 sqrt x K1(2 sqrt x))."""
    x = op.x0
    z = 2.0 * math.sqrt(x)
    alpha0 = specfun.one_minus_z_k1(z)
    _outage(alpha0)
    return _result(x * 2.0 * specfun.bessel_k(0, z) / alpha0, alpha0)


def odo_closed_form(model: FadingModel, op: OperatingPoint) -> OdoResult:
    """Dispatch ``model`` to its closed-form ODO."""
    if model.combining == "sc":
        return odo_sc(odo_closed_form(model.branch, op), model.N)
    if model.combining == "mrc":
        return odo_mrc_rice(model.K, model.N, op)
    if model.kind == "rayleigh":
        return odo_rayleigh(op)
    if model.kind == "rician":
        return odo_rice(model.K, op)
    if model.kind == "twdp":
        return odo_twdp(model.K, model.delta, op)
    return odo_cascaded(op)


def odo(model: FadingModel, op: OperatingPoint) -> OdoResult:
    return odo_closed_form(model, op)


def odo_generic_model(model: FadingModel, op: OperatingPoint) -> OdoResult:
    return odo_generic(gain_distribution(model), op)


# ---------------------------------------------------------------------------
# design helpers
# ---------------------------------------------------------------------------

def op_linear_approx(result: OdoResult, op: OperatingPoint) -> TangentLine:
    return TangentLine(
        slope_per_db=-result.delta / 10.0,
        anchor_db=op.omega0_db,
        anchor_logop=math.log10(result.alpha0),
    )


def op_ratio(result: OdoResult, c: float) -> float:
    """Predicted P_op(Omega_0) / P_op(c Omega_0) = c**delta."""
    if not c > 0:
        raise DomainError("fold change c must be positive")
    return c ** result.delta


def power_for_decade(result: OdoResult) -> float:
    """Power increase in dB buying one decade of outage probability."""
    if not result.delta > 0:
        raise DomainError("delta must be positive")
    return 10.0 / result.delta


def asymptotic_law(model: FadingModel) -> AsymptoticLaw:
    """Coding gain ``alpha`` and diversity order ``b`` of the high-SNR law."""
    if model.combining == "mrc":
        K, N = model.K, model.N
        alpha = math.exp(N * math.log1p(K) - N * K - math.lgamma(N + 1))
        return AsymptoticLaw(alpha=alpha, b=float(N))
    if model.combining == "sc":
        base = asymptotic_law(model.branch)
        if not base.representable:
            return AsymptoticLaw(alpha=math.nan, b=math.nan, representable=False)
        return AsymptoticLaw(alpha=base.alpha ** model.N, b=base.b * model.N)
    if model.kind == "rayleigh":
        return AsymptoticLaw(alpha=1.0, b=1.0)
    if model.kind == "rician":
        return AsymptoticLaw(alpha=(1.0 + model.K) * math.exp(-model.K), b=1.0)
    if model.kind == "twdp":
        # (1+K)/pi * int_0^pi e^{-K(1 + delta cos t)} dt = (1+K) e^{-K} I0(K delta)
        K, d = model.K, model.delta
        z = K * d
        alpha = (1.0 + K) * math.exp(z - K) * specfun.bessel_i_scaled(0, z)
        return AsymptoticLaw(alpha=alpha, b=1.0)
    return AsymptoticLaw(alpha=math.nan, b=math.nan, representable=False)


def result_to_json(model: FadingModel, op: OperatingPoint, result: OdoResult) -> dict:
    line = op_linear_approx(result, op)
    return {
        "model": model.to_json(),
        "R": op.R,
        "omega0_db": op.omega0_db,
        "delta": result.delta,
        "alpha0": result.alpha0,
        "c_db": result.c_db_per_decade,
        "tangent": {"slope": line.slope_per_db, "anchor": [line.anchor_db, line.anchor_logop]},
    }
