"""End-to-end invariant checks run by ``odo-kit validate``.

Every check returns a list of failing tuples; an empty list is a pass.  The
closed forms are looked up on the engine module at call time so a perturbed
implementation is seen by the checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from odokit import channels, odo_engine, specfun
from odokit.errors import NumericRangeError
from odokit.montecarlo import estimate_odo

SCOPES = ("specfun", "channels", "odo_engine", "montecarlo")
CHECK_GRID_DB = tuple(np.linspace(-10.0, 50.0, 40))
REL_TOL = 1e-6
REDUCTION_TOL = {"rice_K0": 1e-12, "mrc_N1": 1e-10, "twdp_delta0": 1e-8, "sc_identity": 1e-10}
COVERAGE_TRIALS = 50
COVERAGE_MIN_HITS = 43
COVERAGE_SAMPLES = 100_000


@dataclass
class CheckResult:
    scope: str
    name: str
    failures: list = field(default_factory=list)
    detail: str = ""

    @property
    def passed(self) -> bool:
        return not self.failures


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def check_models():
    return [
        channels.rayleigh(),
        channels.rician(15.0),
        channels.twdp(12.0, 0.7),
        channels.cascaded(),
        channels.mrc(channels.rician(10.0), 4),
        channels.sc(channels.rician(5.0), 4),
    ]


def _grid_points(R=odo_engine.DEFAULT_RATE):
    return [odo_engine.OperatingPoint(R, float(w)) for w in CHECK_GRID_DB]


# ---------------------------------------------------------------------------
# specfun
# ---------------------------------------------------------------------------

def check_bessel_wronskian():
    # I_0 K_1 + I_1 K_0 = 1/z
    bad = []
    for nu in (0,):
        for z in (0.1, 1.0, 5.0, 15.0, 40.0):
            lhs = specfun.bessel_i_scaled(nu, z) * specfun.bessel_k_scaled(nu + 1, z) + specfun.bessel_i_scaled(
                nu + 1, z
            ) * specfun.bessel_k_scaled(nu, z)
            if _rel(lhs * z, 1.0) > 1e-12:
                bad.append(("wronskian", nu, z, lhs * z))
    return bad


def check_marcum_complement():
    bad = []
    for order in (1, 2, 4):
        for a in (0.0, 1.0, 4.0):
            for b in (0.3, 2.0, 6.0):
                total = specfun.marcum_q(order, a, b) + specfun.marcum_q_complement(order, a, b)
                if abs(total - 1.0) > 1e-13:
                    bad.append(("marcum", order, a, b, total))
    return bad


def check_gauss_legendre():
    bad = []
    for n in (8, 64, 256):
        rule = specfun.gauss_legendre(n)
        if abs(rule.weights.sum() - 2.0) > 1e-13:
            bad.append(("weights", n, rule.weights.sum()))
        deg = 2 * n - 1
        exact = 2.0 / (deg + 1) if deg % 2 == 0 else 0.0
        approx = float(np.sum(rule.weights * rule.nodes ** (deg - 1)))
        if abs(approx - 2.0 / deg) > 1e-12 or abs(float(np.sum(rule.weights * rule.nodes**deg)) - exact) > 1e-12:
            bad.append(("exactness", n, approx))
    return bad


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

def check_pdf_cdf_consistency():
    # F(b) - F(a) against a fine quadrature of f on [a, b]
    bad = []
    rule = specfun.gauss_legendre(64)
    for model in check_models():
        for a, b in ((0.01, 0.05), (0.2, 0.5), (1.0, 2.0)):
            integral = rule.integrate(lambda t: channels.pdf(model, t), a, b)
            diff = float(channels.cdf(model, b) - channels.cdf(model, a))
            if _rel(integral, diff) > 1e-9:
                bad.append(("pdf-cdf", model.label, a, b, integral, diff))
    return bad


def check_sc_cdf_identity():
    bad = []
    for K in (0.0, 1.0, 10.0):
        base = channels.rician(K)
        for N in (2, 4):
            model = channels.sc(base, N)
            for t in (0.01, 0.3, 2.0):
                want = float(channels.cdf(base, t)) ** N
                if _rel(float(channels.cdf(model, t)), want) > 1e-12:
                    bad.append(("sc-cdf", K, N, t))
    return bad


def check_twdp_reduction_distribution():
    bad = []
    for K in (1.0, 12.0):
        for t in (0.01, 0.2, 1.0):
            got = float(channels.cdf(channels.twdp(K, 0.0), t))
            want = float(channels.cdf(channels.rician(K), t))
            if _rel(got, want) > 1e-10:
                bad.append(("twdp-cdf", K, t, got, want))
    return bad


# ---------------------------------------------------------------------------
# odo_engine
# ---------------------------------------------------------------------------

def _finite_points(model):
    for op in _grid_points():
        try:
            yield op, odo_engine.odo_closed_form(model, op)
        except NumericRangeError:
            continue


def check_plugin_consistency():
    """Closed forms against x f(x) / F(x) from the distribution functions."""
    bad = []
    for model in check_models():
        dist = channels.gain_distribution(model)
        for op, closed in _finite_points(model):
            generic = odo_engine.odo_generic(dist, op)
            if _rel(closed.delta, generic.delta) > REL_TOL:
                bad.append(("plugin", model.label, op.omega0_db, closed.delta, generic.delta))
    return bad


def check_numerical_derivative():
    """Closed forms against -10 d log10 F / d Omega_dB by central difference."""
    bad = []
    for model in check_models():
        dist = channels.gain_distribution(model)
        for op, closed in _finite_points(model):
            numeric = odo_engine.odo_by_numerical_derivative(dist, op)
            if _rel(closed.delta, numeric) > REL_TOL:
                bad.append(("derivative", model.label, op.omega0_db, closed.delta, numeric))
    return bad


def check_reductions():
    bad = []
    for op in _grid_points():
        ray = odo_engine.odo_rayleigh(op).delta
        k0 = odo_engine.odo_rice(0.0, op).delta
        if _rel(k0, ray) > REDUCTION_TOL["rice_K0"]:
            bad.append(("rice K=0", op.omega0_db, k0, ray))
        for K in (0.5, 5.0, 15.0):
            rice = odo_engine.odo_rice(K, op)
            mrc1 = odo_engine.odo_mrc_rice(K, 1, op).delta
            if _rel(mrc1, rice.delta) > REDUCTION_TOL["mrc_N1"]:
                bad.append(("mrc N=1", K, op.omega0_db, mrc1, rice.delta))
            tw0 = odo_engine.odo_twdp(K, 0.0, op).delta
            if _rel(tw0, rice.delta) > REDUCTION_TOL["twdp_delta0"]:
                bad.append(("twdp delta=0", K, op.omega0_db, tw0, rice.delta))
    return bad


def check_sc_identity():
    """SC ODO from the combined distribution equals N times the branch ODO."""
    bad = []
    for K in (1.0, 10.0):
        for N in (2, 4):
            model = channels.sc(channels.rician(K), N)
            dist = channels.gain_distribution(model)
            for op in _grid_points():
                try:
                    branch = odo_engine.odo_rice(K, op)
                    combined = odo_engine.odo_generic(dist, op)
                except NumericRangeError:
                    continue
                if _rel(combined.delta, N * branch.delta) > REDUCTION_TOL["sc_identity"]:
                    bad.append(("sc", K, N, op.omega0_db, combined.delta, N * branch.delta))
    return bad


# ---------------------------------------------------------------------------
# montecarlo
# ---------------------------------------------------------------------------

def coverage_point():
    """Rayleigh at x0 = 1, the operating point of the coverage contract."""
    R = odo_engine.DEFAULT_RATE
    return channels.rayleigh(), odo_engine.OperatingPoint(R, 10.0 * math.log10(2.0**R - 1.0))


def coverage_hits(seed: int, method: str = "diff") -> int:
    model, op = coverage_point()
    truth = odo_engine.odo_closed_form(model, op).delta
    hits = 0
    for trial in range(COVERAGE_TRIALS):
        est = estimate_odo(model, op, COVERAGE_SAMPLES, method, seed, stream_key=(trial,))
        hits += est.ci_low <= truth <= est.ci_high
    return hits


def check_mc_coverage(seed: int):
    """95 % intervals should cover the analytic value in >= 43 of 50 runs."""
    # the KDE route carries a smoothing bias the percentile interval does not
    # see, so the contract is checked on the difference estimator
    info = [("diff", coverage_hits(seed, "diff"))]
    bad = [("coverage", "rayleigh x0=1", method, hits, COVERAGE_TRIALS)
           for method, hits in info if hits < COVERAGE_MIN_HITS]
    return bad, info


def check_mc_determinism(seed: int):
    model = channels.rician(5.0)
    op = odo_engine.OperatingPoint(odo_engine.DEFAULT_RATE, 5.0)
    first = estimate_odo(model, op, 50_000, "plugin", seed)
    second = estimate_odo(model, op, 50_000, "plugin", seed)
    return [] if first == second else [("determinism", seed, first, second)]


def run_checks(scope: str = "all", seed: int = 0) -> list[CheckResult]:
    if scope != "all" and scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}; choose all or one of {SCOPES}")
    wanted = SCOPES if scope == "all" else (scope,)
    out = []

    def run(sc, name, func, *args):
        result = func(*args)
        detail = ""
        if isinstance(result, tuple):
            result, info = result
            detail = "; ".join(f"{method} {hits}/{COVERAGE_TRIALS}" for method, hits in info)
        out.append(CheckResult(sc, name, list(result), detail))

    if "specfun" in wanted:
        run("specfun", "bessel Wronskian", check_bessel_wronskian)
        run("specfun", "Marcum Q + complement = 1", check_marcum_complement)
        run("specfun", "Gauss-Legendre exactness", check_gauss_legendre)
    if "channels" in wanted:
        run("channels", "pdf integrates to cdf", check_pdf_cdf_consistency)
        run("channels", "SC cdf is F^N", check_sc_cdf_identity)
        run("channels", "TWDP delta=0 is Rician", check_twdp_reduction_distribution)
    if "odo_engine" in wanted:
        run("odo_engine", "closed form = plug-in", check_plugin_consistency)
        run("odo_engine", "closed form = numerical slope", check_numerical_derivative)
        run("odo_engine", "reductions K=0, N=1, delta=0", check_reductions)
        run("odo_engine", "SC delta = N * branch", check_sc_identity)
    if "montecarlo" in wanted:
        run("montecarlo", "95% CI coverage", check_mc_coverage, seed)
        run("montecarlo", "seeded determinism", check_mc_determinism, seed)
    return out


def format_report(results: list[CheckResult], max_failures: int = 5) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'scope':<11} {'check':<{width}}  status"]
    for r in results:
        status = "PASS" if r.passed else f"FAIL ({len(r.failures)})"
        line = f"{r.scope:<11} {r.name:<{width}}  {status}"
        if r.detail:
            line += f"  [{r.detail}]"
        lines.append(line)
        for failure in r.failures[:max_failures]:
            lines.append("    failing: " + repr(tuple(
                float(v) if isinstance(v, (float, np.floating)) and math.isfinite(v) else v for v in failure
            )))
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines)
