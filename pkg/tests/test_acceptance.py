"""Acceptance criteria 1-9.  Each test prints one PASS/FAIL line in the pytest
terminal summary; ``python tests/test_acceptance.py`` prints the same lines."""

import math
import sys
import tempfile
from pathlib import Path

import numpy as np

from odokit import channels, figures, montecarlo, odo_engine
from odokit.odo_engine import OperatingPoint

R = 1.7
SWEEP = np.arange(-10.0, 50.0 + 1e-9, 0.5)
GRID_40 = np.linspace(-10.0, 60.0, 40)
MC_SEED = 20240717

CRITERIA = {
    1: "Rician design numbers",
    2: "cascaded slope bounds",
    3: "asymptotic convergence",
    4: "reduction identities",
    5: "closed form = plug-in = numerical slope",
    6: "Monte-Carlo markers cover the analytic ODO",
    7: "tangency and power-doubling scaling",
    8: "Rician K-regime behaviour",
    9: "figure bundles are byte-identical",
}


def rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_1_rician_design_numbers():
    at10 = odo_engine.odo_rice(15.0, OperatingPoint(R, 10.0))
    at20 = odo_engine.odo_rice(15.0, OperatingPoint(R, 20.0))
    assert 2.22 <= at10.c_db_per_decade <= 2.32, at10.c_db_per_decade
    assert 19.9 <= 2.0**at10.delta <= 22.1, 2.0**at10.delta
    assert 4.15 <= at20.c_db_per_decade <= 4.35, at20.c_db_per_decade


def test_criterion_2_cascaded_slope_bounds():
    assert odo_engine.odo_cascaded(OperatingPoint(R, 8.0)).delta < 0.5
    assert odo_engine.odo_cascaded(OperatingPoint(R, 20.0)).delta < 0.75
    grid = np.arange(-10.0, 100.0 + 1e-9, 0.5)
    worst = max(odo_engine.odo_cascaded(OperatingPoint(R, o)).delta for o in grid)
    assert worst < 1.0, worst


def test_criterion_3_asymptotic_convergence():
    op = OperatingPoint(R, 60.0)
    for K in (0.1, 1.0, 5.0, 10.0, 15.0):
        d = odo_engine.odo_rice(K, op).delta
        assert abs(d - 1.0) <= 0.05, (K, d)
    branch = channels.rician(10.0)
    for model in (channels.sc(branch, 4), channels.mrc(branch, 4)):
        d = odo_engine.odo_closed_form(model, op).delta
        assert abs(d - 4.0) <= 0.2, (model.label, d)


def test_criterion_4_reduction_identities():
    worst = {"rice K=0": 0.0, "mrc N=1": 0.0, "twdp delta=0": 0.0, "sc": 0.0}
    for omega in SWEEP:
        op = OperatingPoint(R, omega)
        worst["rice K=0"] = max(worst["rice K=0"], rel(odo_engine.odo_rice(0.0, op).delta,
                                                       odo_engine.odo_rayleigh(op).delta))
        for K in (0.5, 5.0, 15.0):
            rice = odo_engine.odo_rice(K, op).delta
            worst["mrc N=1"] = max(worst["mrc N=1"], rel(odo_engine.odo_mrc_rice(K, 1, op).delta, rice))
            worst["twdp delta=0"] = max(worst["twdp delta=0"], rel(odo_engine.odo_twdp(K, 0.0, op).delta, rice))
            for N in (2, 4):
                generic = odo_engine.odo_generic_model(channels.sc(channels.rician(K), N), op).delta
                worst["sc"] = max(worst["sc"], rel(generic, N * rice))
    tol = {"rice K=0": 1e-12, "mrc N=1": 1e-10, "twdp delta=0": 1e-8, "sc": 1e-10}
    assert all(worst[k] <= tol[k] for k in tol), worst


TRIANGLE_MODELS = [
    channels.rayleigh(),
    channels.rician(15.0),
    channels.twdp(12.0, 0.7),
    channels.cascaded(),
    channels.sc(channels.rician(10.0), 4),
    channels.mrc(channels.rician(10.0), 4),
]


def test_criterion_5_three_routes_agree():
    worst = 0.0
    where = None
    for model in TRIANGLE_MODELS:
        dist = channels.gain_distribution(model)
        for omega in GRID_40:
            op = OperatingPoint(R, omega)
            closed = odo_engine.odo_closed_form(model, op).delta
            plugin = odo_engine.odo_generic_model(model, op).delta
            slope = odo_engine.odo_by_numerical_derivative(dist, op)
            err = max(rel(plugin, closed), rel(slope, closed), rel(slope, plugin))
            if err > worst:
                worst, where = err, (model.label, float(omega))
    assert worst <= 1e-6, (worst, where)


MC_POINTS = [
    (channels.rician(0.1), 0.0),
    (channels.rician(1.0), 10.0),
    (channels.rician(5.0), 10.0),
    (channels.rician(15.0), 10.0),
    (channels.sc(channels.rician(10.0), 4), 0.0),
    (channels.mrc(channels.rician(10.0), 4), -2.0),
    (channels.sc(channels.rician(5.0), 4), 0.0),
    (channels.twdp(12.0, 0.3), 10.0),
    (channels.twdp(12.0, 1.0), 15.0),
    (channels.twdp(12.0, 0.7), 10.0),
    (channels.cascaded(), 8.0),
    (channels.rayleigh(), 10.0),
]


def test_criterion_6_monte_carlo_markers():
    hits = []
    for k, (model, omega) in enumerate(MC_POINTS):
        op = OperatingPoint(R, omega)
        n = int(np.clip(montecarlo.required_samples(model, op), 1_000_000, 10_000_000))
        # one split stream per point, as in the figure pipeline
        est = montecarlo.estimate_odo(model, op, n, "diff", MC_SEED, stream_key=(k,))
        truth = odo_engine.odo_closed_form(model, op).delta
        hits.append(est.ci_low <= truth <= est.ci_high)
    missed = [f"{m.label}@{o:g}dB" for (m, o), h in zip(MC_POINTS, hits) if not h]
    assert sum(hits) >= 10, f"{sum(hits)}/12 covered, missed {missed}"


def test_criterion_7_tangency_and_scaling():
    for model, omega in ((channels.rician(15.0), 10.0), (channels.cascaded(), 20.0), (channels.rayleigh(), 0.0)):
        op = OperatingPoint(R, omega)
        res = odo_engine.odo_closed_form(model, op)
        line = odo_engine.op_linear_approx(res, op)
        assert rel(float(line.op(omega)), res.alpha0) <= 1e-12
    op = OperatingPoint(R, 10.0)
    res = odo_engine.odo_rice(15.0, op)
    step_db = 10 * math.log10(2.0)
    predicted = odo_engine.op_ratio(res, 2.0)
    line = odo_engine.op_linear_approx(res, op)
    assert rel(predicted, 2.0**res.delta) <= 1e-12
    assert rel(line.op(10.0) / line.op(10.0 + step_db), 2.0**res.delta) <= 1e-12
    exact = res.alpha0 / odo_engine.odo_rice(15.0, OperatingPoint(R, 10.0 + step_db)).alpha0
    assert rel(predicted, exact) <= 0.15, f"tangent predicts {predicted:.4f}, exact ratio {exact:.4f}"


def test_criterion_8_rician_k_regimes():
    high = [odo_engine.odo_rice(15.0, OperatingPoint(R, o)).delta for o in SWEEP]
    assert max(high) > 1.0
    low = np.array([odo_engine.odo_rice(0.5, OperatingPoint(R, o)).delta for o in SWEEP])
    assert np.all(low <= 1.0 + 1e-9), low.max()
    assert np.all(np.diff(low) >= 0.0)


def test_criterion_9_figure_determinism():
    with tempfile.TemporaryDirectory() as tmp:
        for fig_id in figures.FIGURE_IDS:
            first, second = Path(tmp, fig_id, "a"), Path(tmp, fig_id, "b")
            figures.build_figure(figures.default_flags(fig_id), first)
            figures.build_figure(figures.default_flags(fig_id), second)
            a = {p.name: p.read_bytes() for p in first.iterdir()}
            b = {p.name: p.read_bytes() for p in second.iterdir()}
            assert a == b, fig_id


if __name__ == "__main__":
    failed = 0
    for number, name in CRITERIA.items():
        test = next(v for k, v in globals().items() if k.startswith(f"test_criterion_{number}_"))
        try:
            test()
            print(f"criterion {number}: PASS  {name}")
        except AssertionError as exc:
            failed += 1
            print(f"criterion {number}: FAIL  {name}  ({exc})")
    sys.exit(1 if failed else 0)
