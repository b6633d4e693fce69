"""``odo-kit``: single-point ODO reports, grid sweeps, figure bundles, validation.

Exit codes: 0 ok, 1 validation failure, 2 usage error, 3 numeric range.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

from odokit import channels, figures, validation
from odokit.errors import (
    DomainError,
    InsufficientSamplesError,
    NumericRangeError,
    QuadratureError,
)
from odokit.montecarlo import METHODS, estimate_odo
from odokit.odo_engine import (
    DEFAULT_RATE,
    OperatingPoint,
    odo_closed_form,
    op_linear_approx,
    op_ratio,
    result_to_json,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_RANGE = 3

SWEEP_OUTPUTS = ("delta", "alpha0", "c_db", "op_exact", "op_tangent", "delta_mc")


class UsageError(Exception):
    pass


# argparse takes "-10:0.5:50" or "-5,10" for an option; glue such values to their flag
_VALUE_FLAGS = ("--grid", "--omega0-db", "--anchor-db")
_NEGATIVE_VALUE = re.compile(r"^-[\d.][\d.:,eE+-]*$")


def _join_negative_values(argv: list[str]) -> list[str]:
    out = []
    it = iter(argv)
    for arg in it:
        if arg in _VALUE_FLAGS:
            nxt = next(it, None)
            if nxt is not None and _NEGATIVE_VALUE.match(nxt):
                out.append(f"{arg}={nxt}")
                continue
            out.append(arg)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(arg)
    return out


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _grid(text: str):
    try:
        return figures.parse_grid(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=channels.KINDS, required=True)
    p.add_argument("--K", type=float, help="Rician / TWDP K-factor")
    p.add_argument("--delta", type=float, help="TWDP Delta parameter in [0, 1]")
    p.add_argument("--combining", choices=("none", "sc", "mrc"), default="none")
    p.add_argument("--N", type=int, default=1, help="number of diversity branches")
    p.add_argument("--R", type=float, default=DEFAULT_RATE, help="target rate in bit/s/Hz")


def _add_mc_flags(p: argparse.ArgumentParser, default_samples=None) -> None:
    p.add_argument("--mc-samples", type=int, default=default_samples)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=METHODS, default="diff")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="odo-kit", description="Operational diversity order toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("odo", help="ODO, coding gain and tangent line at one operating point")
    _add_model_flags(p)
    p.add_argument("--omega0-db", type=float, required=True)
    _add_mc_flags(p)
    p.add_argument("--json", action="store_true", help="print a JSON record instead of text")

    p = sub.add_parser("sweep", help="ODO over a grid of average SNRs, as CSV")
    _add_model_flags(p)
    p.add_argument("--grid", type=_grid, default=figures.DEFAULT_GRID, help="start:step:stop in dB")
    p.add_argument("--outputs", default=None,
                   help=f"comma-separated subset of {','.join(SWEEP_OUTPUTS)}")
    p.add_argument("--anchor-db", type=_float_list, default=[],
                   help="tangent anchors in dB for the op_tangent output")
    _add_mc_flags(p)
    p.add_argument("--out", help="CSV path (stdout when omitted)")

    p = sub.add_parser("figure", help="CSV bundle behind one figure")
    p.add_argument("id", nargs="?", choices=figures.FIGURE_IDS)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--from-manifest", help="re-run the bundle described by a manifest.json")
    p.add_argument("--R", type=float)
    p.add_argument("--grid", type=_grid)
    p.add_argument("--anchor-db", type=_float_list)
    p.add_argument("--mc-samples", type=int, help="samples per Monte-Carlo marker")
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--no-mc", action="store_true", help="skip Monte-Carlo markers")

    p = sub.add_parser("validate", help="run the invariant checks")
    p.add_argument("--scope", choices=("all",) + validation.SCOPES, default="all")
    p.add_argument("--seed", type=int, default=0)
    return parser


def model_from_args(args) -> channels.FadingModel:
    kind = args.model
    if kind in ("rician", "twdp") and args.K is None:
        raise UsageError(f"--K is required for --model {kind}")
    if kind == "twdp" and args.delta is None:
        raise UsageError("--delta is required for --model twdp")
    if kind not in ("rician", "twdp") and args.K is not None:
        raise UsageError(f"--K does not apply to --model {kind}")
    if kind != "twdp" and args.delta is not None:
        raise UsageError(f"--delta does not apply to --model {kind}")
    base = {
        "rayleigh": channels.rayleigh,
        "cascaded": channels.cascaded,
        "rician": lambda: channels.rician(args.K),
        "twdp": lambda: channels.twdp(args.K, args.delta),
    }[kind]()
    if args.combining == "none":
        if args.N != 1:
            raise UsageError("--N > 1 needs --combining sc or mrc")
        return base
    if args.combining == "sc":
        return channels.sc(base, args.N)
    return channels.mrc(base, args.N)


def _mc_estimate(args, model, op, stream_key=()):
    if args.mc_samples is None:
        return None
    return estimate_odo(model, op, args.mc_samples, args.method, args.seed, stream_key=stream_key)


def cmd_odo(args) -> int:
    model = model_from_args(args)
    op = OperatingPoint(args.R, args.omega0_db)
    result = odo_closed_form(model, op)
    est = _mc_estimate(args, model, op)
    if args.json:
        record = result_to_json(model, op, result)
        if est is not None:
            record["mc"] = est.to_json(op.omega0_db)
        print(json.dumps(record))
        return EXIT_OK
    line = op_linear_approx(result, op)
    rows = [
        ("model", model.label),
        ("R", f"{op.R:g} bit/s/Hz"),
        ("omega0_db", f"{op.omega0_db:g}"),
        ("x0", f"{op.x0:.10g}"),
        ("delta", f"{result.delta:.10g}"),
        ("alpha0", f"{result.alpha0:.10g}"),
        ("c_db", f"{result.c_db_per_decade:.6g} dB per decade of OP"),
        ("op_ratio_2x", f"{op_ratio(result, 2.0):.6g} (OP drop when power doubles)"),
        ("tangent", f"log10 OP = {line.anchor_logop:.8g} - {result.delta / 10.0:.8g} * (Omega_dB - {op.omega0_db:g})"),
    ]
    if est is not None:
        rows.append((
            "mc",
            f"delta_hat={est.delta_hat:.6g} 95% CI [{est.ci_low:.6g}, {est.ci_high:.6g}] "
            f"(method={est.method}, n={est.n_samples}, seed={est.seed})",
        ))
    width = max(len(k) for k, _ in rows)
    for key, value in rows:
        print(f"{key:<{width}}  {value}")
    return EXIT_OK


def _sweep_outputs(args) -> list[str]:
    if args.outputs is None:
        outputs = ["delta", "alpha0", "c_db"]
        if args.mc_samples is not None:
            outputs.append("delta_mc")
        if args.anchor_db:
            outputs.append("op_tangent")
        return outputs
    outputs = [o.strip() for o in args.outputs.split(",") if o.strip()]
    unknown = sorted(set(outputs) - set(SWEEP_OUTPUTS))
    if unknown or not outputs:
        raise UsageError(f"--outputs must be a non-empty subset of {','.join(SWEEP_OUTPUTS)}")
    if "op_tangent" in outputs and not args.anchor_db:
        raise UsageError("op_tangent output needs --anchor-db")
    if "delta_mc" in outputs and args.mc_samples is None:
        raise UsageError("delta_mc output needs --mc-samples")
    return outputs


def cmd_sweep(args) -> int:
    model = model_from_args(args)
    outputs = _sweep_outputs(args)
    grid = figures.make_grid(*args.grid)
    header, rows = figures.sweep_rows(
        model, args.R, grid, outputs, args.anchor_db, args.mc_samples, args.seed, args.method
    )
    if args.out:
        figures.write_csv(args.out, header, rows)
    else:
        sys.stdout.write(",".join(header) + "\n")
        for row in rows:
            sys.stdout.write(",".join(figures.fmt(v) for v in row) + "\n")
    return EXIT_OK


def cmd_figure(args) -> int:
    if args.from_manifest:
        manifest = figures.rerun_from_manifest(args.from_manifest, args.out)
    else:
        if args.id is None:
            raise UsageError("figure needs an id (fig1..fig6) or --from-manifest")
        flags = figures.default_flags(args.id)
        overrides = {
            "R": args.R,
            "grid": list(args.grid) if args.grid else None,
            "anchors_db": args.anchor_db,
            "mc_samples": args.mc_samples,
            "seed": args.seed,
            "method": args.method,
        }
        for key, value in overrides.items():
            if value is None:
                continue
            if key == "anchors_db" and key not in flags:
                raise UsageError("--anchor-db applies to fig2 and fig6 only")
            flags[key] = value
        if args.no_mc:
            flags["mc"] = False
        manifest = figures.build_figure(flags, args.out)
    for name in manifest["emitted_files"]:
        print(name)
    return EXIT_OK


def cmd_validate(args) -> int:
    results = validation.run_checks(args.scope, args.seed)
    print(validation.format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


COMMANDS = {"odo": cmd_odo, "sweep": cmd_sweep, "figure": cmd_figure, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_negative_values(sys.argv[1:] if argv is None else list(argv)))
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DomainError, InsufficientSamplesError, ValueError) as exc:
        print(f"odo-kit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericRangeError, QuadratureError, OverflowError) as exc:
        print(f"odo-kit: numeric range: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except OSError as exc:
        print(f"odo-kit: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
