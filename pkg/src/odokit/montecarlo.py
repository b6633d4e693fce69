"""Empirical (model-agnostic) estimation of the operational diversity order.

Two estimators are provided:

``diff``
    slope of the empirical log10-CDF across a +/-0.25 dB stencil around the
    operating point, both stencil thresholds applied to one sample set;
``plugin``
    ``x0 * f_hat(x0) / F_hat(x0)`` with a log-domain Gaussian KDE for the
    density and the ECDF for the distribution.

Confidence intervals are 95 % percentile bootstrap intervals.  Both statistics
depend on the data only through a few counts (and, for the KDE, the samples
near ``x0``), so resampling with replacement is carried out exactly as a
multinomial draw over those categories instead of materializing ``n``-sized
resamples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from odokit import channels
from odokit.channels import FadingModel
from odokit.errors import DomainError, InsufficientSamplesError
from odokit.odo_engine import OperatingPoint

MIN_SAMPLES = 10_000
MIN_TAIL_COUNT = 100
MIN_KERNEL_COUNT = 30
STENCIL_DB = 0.25
N_BOOTSTRAP = 200
CI_LEVEL = 0.95
METHODS = ("diff", "plugin")
# kernel mass beyond this many bandwidths is below 1e-14 and ignored
_KERNEL_REACH = 8.0


@dataclass(frozen=True)
class EmpiricalEstimate:
    delta_hat: float
    ci_low: float
    ci_high: float
    n_samples: int
    method: str
    seed: int

    def to_json(self, omega0_db: float) -> dict:
        return {
            "omega0_db": omega0_db,
            "delta_hat": self.delta_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n": self.n_samples,
            "method": self.method,
            "seed": self.seed,
        }


def ecdf(samples_sorted, t):
    """Fraction of samples <= t (right-continuous)."""
    samples_sorted = np.asarray(samples_sorted)
    if samples_sorted.size == 0:
        raise DomainError("ecdf of an empty sample")
    counts = np.searchsorted(samples_sorted, t, side="right")
    out = counts / samples_sorted.size
    return float(out) if np.ndim(out) == 0 else out


def silverman_log_bandwidth(samples) -> float:
    """Silverman's rule of thumb applied to log(samples)."""
    u = np.log(np.asarray(samples))
    q75, q25 = np.percentile(u, [75.0, 25.0])
    spread = min(np.std(u), (q75 - q25) / 1.34)
    return 0.9 * spread * u.size ** (-0.2)


def _kernel_window(log_samples, log_t, bandwidth):
    near = np.abs(log_samples - log_t) <= _KERNEL_REACH * bandwidth
    return near, (log_samples[near] - log_t) / bandwidth


def kde_pdf(samples, t: float, bandwidth: float | None = None) -> float:
    """Gaussian KDE of the gain density at ``t > 0``.

    The kernel acts on log(g) and is mapped back with the 1/t Jacobian, which
    keeps the estimate on the positive axis.  ``bandwidth`` is in log units;
    by default Silverman's rule on the log samples.
    """
    samples = np.asarray(samples)
    if samples.size < MIN_SAMPLES:
        raise InsufficientSamplesError(
            f"KDE needs at least {MIN_SAMPLES} samples, got {samples.size}"
        )
    if not t > 0:
        raise DomainError("kde_pdf needs t > 0")
    h = silverman_log_bandwidth(samples) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise DomainError("bandwidth must be positive")
    log_samples = np.log(samples)
    log_t = math.log(t)
    if np.count_nonzero(np.abs(log_samples - log_t) <= 5.0 * h) < MIN_KERNEL_COUNT:
        raise InsufficientSamplesError(
            f"fewer than {MIN_KERNEL_COUNT} samples within 5 bandwidths of t={t:g}"
        )
    _, scaled = _kernel_window(log_samples, log_t, h)
    density_log = np.exp(-0.5 * scaled * scaled).sum() / (samples.size * h * math.sqrt(2.0 * math.pi))
    return float(density_log / t)


def _percentile_ci(point, boot, level):
    tail = 50.0 * (1.0 - level)
    lo, hi = np.percentile(boot, [tail, 100.0 - tail])
    # a percentile interval need not contain the point estimate; widen it so it does
    return min(lo, point), max(hi, point)


def _diff_estimate(g, op, rng, stencil_db, n_boot, level):
    lo = OperatingPoint(op.R, op.omega0_db - stencil_db)
    hi = OperatingPoint(op.R, op.omega0_db + stencil_db)
    n = g.size
    deep = int(np.count_nonzero(g <= hi.x0))
    shallow = int(np.count_nonzero(g <= lo.x0))
    if deep < MIN_TAIL_COUNT:
        raise InsufficientSamplesError(
            f"only {deep} of {n} samples fall below the deeper stencil threshold; "
            f"need {MIN_TAIL_COUNT} (raise n or lower omega0)"
        )
    scale = -10.0 / (2.0 * stencil_db)
    point = scale * (math.log10(deep) - math.log10(shallow))
    probs = np.array([deep, shallow - deep, n - shallow], dtype=float) / n
    counts = rng.multinomial(n, probs, size=n_boot)
    boot_deep = counts[:, 0]
    boot_shallow = counts[:, 0] + counts[:, 1]
    with np.errstate(divide="ignore"):
        boot = scale * (np.log10(boot_deep) - np.log10(boot_shallow))
    ci = _percentile_ci(point, boot, level)
    return point, ci


def _plugin_estimate(g, op, rng, bandwidth, n_boot, level):
    n = g.size
    x = op.x0
    below = int(np.count_nonzero(g <= x))
    if below < MIN_TAIL_COUNT:
        raise InsufficientSamplesError(
            f"only {below} of {n} samples fall below x0; need {MIN_TAIL_COUNT}"
        )
    h = silverman_log_bandwidth(g) if bandwidth is None else float(bandwidth)
    f_hat = kde_pdf(g, x, h)
    point = x * f_hat / (below / n)

    log_g = np.log(g)
    near, scaled = _kernel_window(log_g, math.log(x), h)
    kern = np.exp(-0.5 * scaled * scaled) / (n * h * math.sqrt(2.0 * math.pi) * x)
    near_below = g[near] <= x
    m = kern.size
    below_out = below - int(np.count_nonzero(near_below))
    # a multinomial over the m window samples and two pooled bins, drawn as a
    # 3-way split followed by a uniform allocation inside the window
    groups = rng.multinomial(n, [m / n, below_out / n, (n - m - below_out) / n], size=n_boot)
    near_below_f = near_below.astype(float)
    f_boot = np.empty(n_boot)
    F_boot = np.empty(n_boot)
    for r in range(n_boot):
        counts = np.bincount(rng.integers(0, m, size=groups[r, 0]), minlength=m)
        f_boot[r] = counts @ kern
        F_boot[r] = (counts @ near_below_f + groups[r, 1]) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        boot = x * f_boot / F_boot
    ci = _percentile_ci(point, boot[np.isfinite(boot)], level)
    return point, ci


def estimate_odo(
    model: FadingModel,
    op: OperatingPoint,
    n: int,
    method: str = "diff",
    seed: int = 0,
    *,
    stream_key: tuple[int, ...] = (),
    stencil_db: float = STENCIL_DB,
    bandwidth: float | None = None,
    n_boot: int = N_BOOTSTRAP,
    level: float = CI_LEVEL,
) -> EmpiricalEstimate:
    """Monte-Carlo estimate of the ODO of ``model`` at ``op``.

    Samples come from the stream ``(seed, *stream_key)``; the bootstrap uses a
    separate child stream, so the result is a deterministic function of the
    arguments.
    """
    if method not in METHODS:
        raise DomainError(f"unknown estimator {method!r}; choose from {METHODS}")
    if n < MIN_SAMPLES:
        raise InsufficientSamplesError(f"need at least {MIN_SAMPLES} samples, got {n}")
    g = channels.sample(model, channels.make_stream(seed, *stream_key, 0), int(n))
    boot_rng = channels.make_stream(seed, *stream_key, 1)
    if method == "diff":
        point, (lo, hi) = _diff_estimate(g, op, boot_rng, stencil_db, n_boot, level)
    else:
        point, (lo, hi) = _plugin_estimate(g, op, boot_rng, bandwidth, n_boot, level)
    return EmpiricalEstimate(
        delta_hat=float(point),
        ci_low=float(lo),
        ci_high=float(hi),
        n_samples=int(n),
        method=method,
        seed=int(seed),
    )


def required_samples(model: FadingModel, op: OperatingPoint, tail_count: int = 1000,
                     stencil_db: float = STENCIL_DB) -> int:
    """Sample size giving ``tail_count`` expected hits below the deeper stencil
    threshold, from the analytic CDF."""
    hi = OperatingPoint(op.R, op.omega0_db + stencil_db)
    F = float(channels.cdf(model, hi.x0))
    if not F > 0:
        return math.inf
    return max(MIN_SAMPLES, int(math.ceil(tail_count / F)))
