"""Fading-model catalog.

Every model describes the normalized power gain ``g`` (``E[g] = 1`` per branch)
through its PDF, CDF and a random sampler.  Supported base models are
Rayleigh, Rician(K), TWDP(K, delta) and cascaded (product) Rayleigh;
selection combining wraps any of them, maximal-ratio combining is provided
for Rician branches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from odokit import specfun
from odokit.errors import DomainError, QuadratureError

KINDS = ("rayleigh", "rician", "twdp", "cascaded")
COMBINERS = (None, "sc", "mrc")

TWDP_BASE_ORDER = 64
TWDP_MAX_ORDER = 256
TWDP_RTOL = 1e-10

_CHUNK = 1 << 20


@dataclass(frozen=True)
class FadingModel:
    """Descriptor of a normalized channel-gain distribution.

    ``K`` is used by Rician and TWDP, ``delta`` (the specular amplitude
    imbalance) by TWDP only.  ``combining`` is ``None``, ``"sc"`` or ``"mrc"``
    over ``N`` i.i.d. branches.
    """

    kind: str
    K: float | None = None
    delta: float | None = None
    combining: str | None = None
    N: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown fading model {self.kind!r}")
        if self.kind in ("rician", "twdp"):
            if self.K is None or not self.K >= 0 or not math.isfinite(self.K):
                raise DomainError(f"{self.kind} needs a finite K >= 0")
            object.__setattr__(self, "K", float(self.K))
        elif self.K is not None:
            raise DomainError(f"{self.kind} takes no K parameter")
        if self.kind == "twdp":
            if self.delta is None or not 0.0 <= self.delta <= 1.0:
                raise DomainError("twdp needs delta in [0, 1]")
            object.__setattr__(self, "delta", float(self.delta))
        elif self.delta is not None:
            raise DomainError(f"{self.kind} takes no delta parameter")
        if self.combining not in COMBINERS:
            raise DomainError(f"unknown combining scheme {self.combining!r}")
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise DomainError(f"branch count must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if self.combining is None and self.N != 1:
            raise DomainError("N > 1 requires a combining scheme")
        if self.combining == "mrc" and self.kind != "rician":
            raise DomainError("MRC is only available for Rician branches")

    @property
    def branch(self) -> FadingModel:
        """The single-branch model underneath a combiner."""
        return FadingModel(self.kind, self.K, self.delta)

    @property
    def label(self) -> str:
        parts = [self.kind]
        if self.K is not None:
            parts.append(f"K{self.K:g}")
        if self.delta is not None:
            parts.append(f"D{self.delta:g}")
        if self.combining:
            parts.append(f"{self.combining}{self.N}")
        return "_".join(parts)

    def to_json(self) -> dict:
        combining = None
        if self.combining:
            combining = {"type": self.combining, "N": self.N}
        return {"kind": self.kind, "K": self.K, "delta": self.delta, "combining": combining}

    @classmethod
    def from_json(cls, obj: dict) -> FadingModel:
        comb = obj.get("combining")
        if comb:
            return cls(obj["kind"], obj.get("K"), obj.get("delta"), comb["type"], comb["N"])
        return cls(obj["kind"], obj.get("K"), obj.get("delta"))


def rayleigh() -> FadingModel:
    return FadingModel("rayleigh")


def rician(K: float) -> FadingModel:
    return FadingModel("rician", K)


def twdp(K: float, delta: float) -> FadingModel:
    return FadingModel("twdp", K, delta)


def cascaded() -> FadingModel:
    return FadingModel("cascaded")


def sc(base: FadingModel, N: int) -> FadingModel:
    return FadingModel(base.kind, base.K, base.delta, "sc", N)


def mrc(base: FadingModel, N: int) -> FadingModel:
    return FadingModel(base.kind, base.K, base.delta, "mrc", N)


@dataclass(frozen=True)
class GainDistribution:
    """PDF/CDF pair of a gain ``g``; both accept scalars or arrays."""

    pdf: Callable
    cdf: Callable
    support_min: float = 0.0
    sf: Callable | None = None

    def log_cdf(self, t) -> float:
        """Natural log of the CDF, taken through the survival function when
        the CDF is close to one."""
        F = float(self.cdf(t))
        if self.sf is not None and F > 0.5:
            return math.log1p(-float(self.sf(t)))
        return math.log(F) if F > 0 else -math.inf


def gain_distribution(model: FadingModel) -> GainDistribution:
    return GainDistribution(
        pdf=lambda t: pdf(model, t),
        cdf=lambda t: cdf(model, t),
        support_min=0.0,
        sf=lambda t: sf(model, t),
    )


def _gain_array(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("gain must be non-negative")
    return arr, arr.ndim == 0


# ---------------------------------------------------------------------------
# TWDP integrals over the specular phase difference
# ---------------------------------------------------------------------------

def twdp_theta_integral(integrand, rtol=TWDP_RTOL):
    """Mean of ``integrand(theta)`` over [0, pi] by Gauss-Legendre.

    The order starts at 64 and is doubled until two successive results agree to
    ``rtol`` (relative); failing that at order 256 raises ``QuadratureError``.
    ``integrand`` maps an array of angles to an array of values (possibly with
    trailing axes).
    """
    order = TWDP_BASE_ORDER
    rule = specfun.gauss_legendre(order)
    theta, w = rule.mapped(0.0, math.pi)
    prev = np.tensordot(w, integrand(theta), axes=(0, 0)) / math.pi
    while order < TWDP_MAX_ORDER:
        order *= 2
        theta, w = specfun.gauss_legendre(order).mapped(0.0, math.pi)
        cur = np.tensordot(w, integrand(theta), axes=(0, 0)) / math.pi
        scale = np.maximum(np.abs(cur), np.finfo(float).tiny)
        if np.all(np.abs(cur - prev) <= rtol * scale):
            return cur
        prev = cur
    raise QuadratureError(f"TWDP theta-integral did not converge by order {order}")


def twdp_kappa(K, delta, theta):
    """Phase-conditioned specular-to-diffuse ratio K (1 + delta cos theta)."""
    return K * (1.0 + delta * np.cos(theta))


# ---------------------------------------------------------------------------
# base-model PDFs and CDFs
# ---------------------------------------------------------------------------

def _rician_pdf(K, t):
    z = 2.0 * np.sqrt(K * (1.0 + K) * t)
    # -K - (1+K) t + z, written as a negative square
    expo = -(np.sqrt(K) - np.sqrt((1.0 + K) * t)) ** 2
    return (1.0 + K) * np.exp(expo) * specfun.bessel_i_scaled(0, z)


def _rician_cdf(K, t):
    b = np.sqrt(2.0 * (1.0 + K) * t)
    a = math.sqrt(2.0 * K)
    return np.array([specfun.marcum_q_complement(1, a, bi) for bi in np.ravel(b)]).reshape(
        np.shape(t)
    )


def _twdp_pdf(K, delta, t):
    t_flat = np.atleast_1d(t).ravel()

    def integrand(theta):
        kappa = twdp_kappa(K, delta, theta)[:, None]
        z = 2.0 * np.sqrt(kappa * (1.0 + K) * t_flat[None, :])
        expo = -(np.sqrt(kappa) - np.sqrt((1.0 + K) * t_flat[None, :])) ** 2
        return (1.0 + K) * np.exp(expo) * specfun.bessel_i_scaled(0, z)

    return twdp_theta_integral(integrand).reshape(np.shape(t))


def _twdp_cdf(K, delta, t):
    out = []
    for ti in np.atleast_1d(t).ravel():
        b = math.sqrt(2.0 * (1.0 + K) * ti)

        def integrand(theta, b=b):
            a = np.sqrt(2.0 * twdp_kappa(K, delta, theta))
            return specfun.marcum_q_complement(1, a, b)

        out.append(twdp_theta_integral(integrand))
    return np.clip(np.array(out, dtype=float), 0.0, 1.0).reshape(np.shape(t))


def _twdp_sf(K, delta, t):
    out = []
    for ti in np.atleast_1d(t).ravel():
        b = math.sqrt(2.0 * (1.0 + K) * ti)

        def integrand(theta, b=b):
            return specfun.marcum_q(1, np.sqrt(2.0 * twdp_kappa(K, delta, theta)), b)

        out.append(twdp_theta_integral(integrand))
    return np.clip(np.array(out, dtype=float), 0.0, 1.0).reshape(np.shape(t))


def _cascaded_pdf(t):
    out = np.full(np.shape(t), np.inf)
    pos = t > 0
    out[pos] = 2.0 * specfun.bessel_k(0, 2.0 * np.sqrt(t[pos]))
    return out


def _cascaded_cdf(t):
    out = np.zeros(np.shape(t))
    pos = t > 0
    out[pos] = specfun.one_minus_z_k1(2.0 * np.sqrt(t[pos]))
    return out


def _mrc_rician_pdf(K, N, t):
    # noncentral chi-square with 2N degrees of freedom, noncentrality 2KN,
    # in the variable 2(1+K)t; written via the entire function
    # I_{N-1}(2 sqrt(u)) / u^{(N-1)/2} so that K = 0 needs no special case
    u = N * K * (1.0 + K) * t
    with np.errstate(divide="ignore"):
        log_pdf = (
            math.log1p(K)
            + (N - 1) * np.log((1.0 + K) * t)
            - N * K
            - (1.0 + K) * t
            + specfun.log_bessel_i_power_ratio(N - 1, u)
        )
    return np.exp(log_pdf)


def _mrc_rician_cdf(K, N, t):
    a = math.sqrt(2.0 * K * N)
    b = np.sqrt(2.0 * (1.0 + K) * t)
    return np.array([specfun.marcum_q_complement(N, a, bi) for bi in np.ravel(b)]).reshape(
        np.shape(t)
    )


def _base_pdf(model, t):
    if model.kind == "rayleigh":
        return np.exp(-t)
    if model.kind == "rician":
        return _rician_pdf(model.K, t)
    if model.kind == "twdp":
        return _twdp_pdf(model.K, model.delta, t)
    return _cascaded_pdf(t)


def _base_cdf(model, t):
    if model.kind == "rayleigh":
        return -np.expm1(-t)
    if model.kind == "rician":
        return _rician_cdf(model.K, t)
    if model.kind == "twdp":
        return _twdp_cdf(model.K, model.delta, t)
    return _cascaded_cdf(t)


def _base_sf(model, t):
    if model.kind == "rayleigh":
        return np.exp(-t)
    if model.kind == "rician":
        a = math.sqrt(2.0 * model.K)
        b = np.sqrt(2.0 * (1.0 + model.K) * t)
        return np.array([specfun.marcum_q(1, a, bi) for bi in np.ravel(b)]).reshape(np.shape(t))
    if model.kind == "twdp":
        return _twdp_sf(model.K, model.delta, t)
    out = np.ones(np.shape(t))
    pos = t > 0
    z = 2.0 * np.sqrt(t[pos])
    out[pos] = z * specfun.bessel_k(1, z)
    return out


def pdf(model: FadingModel, t):
    """Density of the (combined) gain at ``t >= 0``."""
    t, scalar = _gain_array(t)
    if model.combining == "mrc":
        out = _mrc_rician_pdf(model.K, model.N, t)
    elif model.combining == "sc":
        f = _base_pdf(model, t)
        F = _base_cdf(model, t)
        out = model.N * f * F ** (model.N - 1)
    else:
        out = _base_pdf(model, t)
    out = np.asarray(out, dtype=float)
    return float(out) if scalar else out


def cdf(model: FadingModel, t):
    """Probability that the (combined) gain falls below ``t >= 0``."""
    t, scalar = _gain_array(t)
    if model.combining == "mrc":
        out = _mrc_rician_cdf(model.K, model.N, t)
    elif model.combining == "sc":
        out = _base_cdf(model, t) ** model.N
    else:
        out = _base_cdf(model, t)
    out = np.asarray(out, dtype=float)
    return float(out) if scalar else out


def sf(model: FadingModel, t):
    """Survival function 1 - cdf, accurate when the CDF is close to one."""
    t, scalar = _gain_array(t)
    if model.combining == "mrc":
        a = math.sqrt(2.0 * model.K * model.N)
        b = np.sqrt(2.0 * (1.0 + model.K) * t)
        out = np.array([specfun.marcum_q(model.N, a, bi) for bi in np.ravel(b)]).reshape(
            np.shape(t)
        )
    elif model.combining == "sc":
        # 1 - (1 - S)^N
        out = -np.expm1(model.N * np.log1p(-_base_sf(model, t)))
    else:
        out = _base_sf(model, t)
    out = np.asarray(out, dtype=float)
    return float(out) if scalar else out


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def make_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based (Philox) stream for ``seed`` and a spawn ``key``.

    Distinct keys give non-overlapping streams, so workers never share one.
    """
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def twdp_amplitudes(K: float, delta: float) -> tuple[float, float]:
    """Specular amplitudes V1 >= V2 with V1^2 + V2^2 = K/(K+1) and
    2 V1 V2 / (V1^2 + V2^2) = delta."""
    scale = 0.5 * math.sqrt(K / (K + 1.0))
    s, d = math.sqrt(1.0 + delta), math.sqrt(1.0 - delta)
    return scale * (s + d), scale * (s - d)


def _branch_draws(model, rng, n):
    """One branch gain per sample.

    Draws per sample: Rayleigh and Rician two normals, TWDP two normals plus
    two uniforms, cascaded two exponentials.
    """
    if model.kind == "cascaded":
        return rng.standard_exponential(n) * rng.standard_exponential(n)
    re = rng.standard_normal(n)
    im = rng.standard_normal(n)
    if model.kind == "rayleigh":
        return 0.5 * (re * re + im * im)
    K = model.K
    sigma = math.sqrt(0.5 / (K + 1.0))
    re *= sigma
    im *= sigma
    if model.kind == "rician":
        re += math.sqrt(K / (K + 1.0))
    else:
        v1, v2 = twdp_amplitudes(K, model.delta)
        phi1 = rng.uniform(0.0, 2.0 * math.pi, n)
        phi2 = rng.uniform(0.0, 2.0 * math.pi, n)
        re += v1 * np.cos(phi1) + v2 * np.cos(phi2)
        im += v1 * np.sin(phi1) + v2 * np.sin(phi2)
    return re * re + im * im


def sample(model: FadingModel, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` i.i.d. draws of the (combined) gain from the stream ``rng``.

    Draws are produced in fixed-size chunks, so the result depends only on the
    stream state and ``n``.
    """
    if n < 1:
        raise DomainError("sample count must be >= 1")
    out = np.empty(n)
    for start in range(0, n, _CHUNK):
        m = min(_CHUNK, n - start)
        if model.combining is None:
            out[start : start + m] = _branch_draws(model, rng, m)
            continue
        acc = _branch_draws(model.branch, rng, m)
        for _ in range(model.N - 1):
            nxt = _branch_draws(model.branch, rng, m)
            if model.combining == "sc":
                np.maximum(acc, nxt, out=acc)
            else:
                acc += nxt
        out[start : start + m] = acc
    return out
