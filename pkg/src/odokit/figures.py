"""Plot-ready CSV bundles behind the six figures of the ODO study.

Each bundle holds analytic curves, Monte-Carlo markers (figures 1, 3, 4, 5),
tangent-line OP families (figures 2, 6), asymptote references, and a
``manifest.json`` from which the bundle can be regenerated bit for bit.
"""

from __future__ import annotations

import csv
import json
import os
import platform
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from odokit import __version__, channels
from odokit.channels import FadingModel
from odokit.errors import InsufficientSamplesError, NumericRangeError
from odokit.montecarlo import estimate_odo, required_samples
from odokit.odo_engine import (
    DEFAULT_RATE,
    OperatingPoint,
    asymptotic_law,
    odo_closed_form,
    op_linear_approx,
)

FIGURE_IDS = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6")
DEFAULT_GRID = (-10.0, 0.5, 50.0)
DEFAULT_SEED = 2024
DEFAULT_MC_SAMPLES = 1_000_000
MC_MARKER_STEP_DB = 5.0

FIG1_K = (0.1, 1.0, 5.0, 10.0, 15.0)
FIG3_K = (1.0, 5.0, 10.0, 15.0)
FIG3_N = 4
FIG4_K = 12.0
FIG4_DELTAS = (0.0, 0.3, 0.7, 1.0)
FIG2_K = 15.0
FIG2_ANCHORS = (10.0, 15.0, 20.0)
FIG6_ANCHORS = (10.0, 20.0, 30.0)

SWEEP_COLUMNS = ("omega0_db", "delta", "alpha0", "c_db")
MC_COLUMNS = ("omega0_db", "delta_hat", "ci_low", "ci_high", "n", "method", "seed")


def fmt(value) -> str:
    """Shortest round-trip text for a CSV cell ('' for missing values)."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    return repr(float(value))


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def worker_count() -> int | None:
    raw = os.environ.get("ODOKIT_THREADS")
    if not raw:
        return None
    return max(1, int(raw))


def ordered_map(func, items):
    """``map`` over a thread pool; results keep the order of ``items``."""
    items = list(items)
    workers = worker_count()
    if workers == 1 or len(items) < 2:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def make_grid(start: float, step: float, stop: float) -> list[float]:
    if not step > 0 or not start < stop:
        raise ValueError("grid needs step > 0 and start < stop")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def parse_grid(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must look like start:step:stop, got {text!r}")
    start, step, stop = (float(p) for p in parts)
    make_grid(start, step, stop)
    return start, step, stop


# ---------------------------------------------------------------------------
# row builders
# ---------------------------------------------------------------------------

def odo_rows(model: FadingModel, R: float, grid) -> list[tuple]:
    def point(omega_db):
        res = odo_closed_form(model, OperatingPoint(R, omega_db))
        return (omega_db, res.delta, res.alpha0, res.c_db_per_decade)

    return ordered_map(point, grid)


def mc_rows(model, R, grid, cap, seed, series_index, method="diff"):
    """Markers every MC_MARKER_STEP_DB dB; points needing more than ``cap``
    samples are skipped and reported."""
    points = [
        (j, w) for j, w in enumerate(grid) if abs(w / MC_MARKER_STEP_DB - round(w / MC_MARKER_STEP_DB)) < 1e-9
    ]

    def point(item):
        j, omega_db = item
        op = OperatingPoint(R, omega_db)
        if required_samples(model, op) > cap:
            return None
        try:
            est = estimate_odo(model, op, cap, method, seed, stream_key=(series_index, j))
        except InsufficientSamplesError:
            return None
        return (omega_db, est.delta_hat, est.ci_low, est.ci_high, est.n_samples, est.method, est.seed)

    results = ordered_map(point, points)
    rows = [r for r in results if r is not None]
    skipped = [w for (_, w), r in zip(points, results) if r is None]
    return rows, skipped


def op_rows(model: FadingModel, R: float, grid, anchors) -> tuple[list[str], list[tuple]]:
    lines = [
        op_linear_approx(odo_closed_form(model, OperatingPoint(R, a)), OperatingPoint(R, a))
        for a in anchors
    ]
    header = ["omega_db", "op_exact"] + [f"op_tangent_at_{a:g}db" for a in anchors]
    rows = []
    for omega_db in grid:
        exact = channels.cdf(model, OperatingPoint(R, omega_db).x0)
        rows.append((omega_db, exact, *(float(line.op(omega_db)) for line in lines)))
    return header, rows


def asymptote_rows(models) -> list[tuple]:
    rows = []
    for model in models:
        law = asymptotic_law(model)
        if law.representable:
            rows.append((model.label, 1, law.alpha, law.b))
        else:
            rows.append((model.label, 0, None, None))
    return rows


# ---------------------------------------------------------------------------
# figure definitions
# ---------------------------------------------------------------------------

def figure_series(fig_id: str):
    """Models drawn as ODO curves (figs 1, 3, 4, 5) or OP families (figs 2, 6)."""
    if fig_id == "fig1":
        return [channels.rician(K) for K in FIG1_K]
    if fig_id == "fig2":
        return [channels.rician(FIG2_K)]
    if fig_id == "fig3":
        out = []
        for K in FIG3_K:
            out.append(channels.sc(channels.rician(K), FIG3_N))
            out.append(channels.mrc(channels.rician(K), FIG3_N))
        return out
    if fig_id == "fig4":
        return [channels.twdp(FIG4_K, d) for d in FIG4_DELTAS]
    if fig_id in ("fig5", "fig6"):
        return [channels.rayleigh(), channels.cascaded()]
    raise ValueError(f"unknown figure {fig_id!r}; choose from {FIGURE_IDS}")


def default_flags(fig_id: str) -> dict:
    flags = {
        "id": fig_id,
        "R": DEFAULT_RATE,
        "grid": list(DEFAULT_GRID),
        "seed": DEFAULT_SEED,
        "mc_samples": DEFAULT_MC_SAMPLES,
        "mc": fig_id in ("fig1", "fig3", "fig4", "fig5"),
        "method": "diff",
    }
    if fig_id == "fig2":
        flags["anchors_db"] = list(FIG2_ANCHORS)
    if fig_id == "fig6":
        flags["anchors_db"] = list(FIG6_ANCHORS)
    return flags


def build_figure(flags: dict, outdir: str | os.PathLike) -> dict:
    """Write the bundle for ``flags["id"]`` into ``outdir``; returns the manifest."""
    fig_id = flags["id"]
    models = figure_series(fig_id)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    R = float(flags["R"])
    grid = make_grid(*flags["grid"])
    emitted = []
    skipped = {}
    sample_counts = {}

    def emit(name, header, rows):
        write_csv(out / name, header, rows)
        emitted.append(name)

    if fig_id in ("fig2", "fig6"):
        for model in models:
            header, rows = op_rows(model, R, grid, flags["anchors_db"])
            emit(f"{fig_id}_op_{model.label}.csv", header, rows)
    else:
        for i, model in enumerate(models):
            emit(f"{fig_id}_odo_{model.label}.csv", SWEEP_COLUMNS, odo_rows(model, R, grid))
            if flags.get("mc"):
                rows, missing = mc_rows(
                    model, R, grid, int(flags["mc_samples"]), int(flags["seed"]), i, flags["method"]
                )
                emit(f"{fig_id}_mc_{model.label}.csv", MC_COLUMNS, rows)
                skipped[model.label] = missing
                sample_counts[model.label] = int(flags["mc_samples"])
    emit(f"{fig_id}_asymptotes.csv", ("series", "representable", "alpha", "b"), asymptote_rows(models))

    manifest = {
        "command": "figure",
        "flags": flags,
        "seed": int(flags["seed"]),
        "versions": {
            "odokit": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "series": [m.to_json() for m in models],
        "mc_samples_per_marker": sample_counts,
        "skipped_markers_db": skipped,
        "emitted_files": emitted,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def rerun_from_manifest(manifest_path, outdir) -> dict:
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    return build_figure(manifest["flags"], outdir)


def sweep_rows(model, R, grid, outputs, anchors=(), mc_samples=None, seed=0, method="diff"):
    """Header and rows of a sweep CSV.  ``outputs`` is a subset of
    {delta, alpha0, c_db, op_exact, op_tangent, delta_mc}."""
    header = ["omega0_db"]
    for name in ("delta", "alpha0", "c_db", "op_exact"):
        if name in outputs:
            header.append(name)
    lines = []
    if "op_tangent" in outputs:
        for a in anchors:
            op = OperatingPoint(R, a)
            lines.append(op_linear_approx(odo_closed_form(model, op), op))
            header.append(f"op_tangent_at_{a:g}db")
    with_mc = "delta_mc" in outputs
    if with_mc:
        header += ["delta_mc", "ci_low", "ci_high"]

    def point(item):
        j, omega_db = item
        op = OperatingPoint(R, omega_db)
        res = odo_closed_form(model, op)
        row = [omega_db]
        values = {"delta": res.delta, "alpha0": res.alpha0, "c_db": res.c_db_per_decade,
                  "op_exact": res.alpha0}
        row += [values[name] for name in ("delta", "alpha0", "c_db", "op_exact") if name in outputs]
        row += [float(line.op(omega_db)) for line in lines]
        if with_mc:
            try:
                est = estimate_odo(model, op, mc_samples, method, seed, stream_key=(j,))
                row += [est.delta_hat, est.ci_low, est.ci_high]
            except InsufficientSamplesError:
                row += [None, None, None]
        return tuple(row)

    return header, ordered_map(point, list(enumerate(grid)))


__all__ = [
    "FIGURE_IDS",
    "NumericRangeError",
    "build_figure",
    "default_flags",
    "make_grid",
    "parse_grid",
    "rerun_from_manifest",
    "sweep_rows",
    "write_csv",
]
