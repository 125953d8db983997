"""Command-line front end: fit, simulate and pe subcommands.

Exit codes: 0 success, 2 input/validation error, 3 numerical failure.
Reports are written atomically (temp file + rename); report paths also
receive a rendered matplotlib figure unless --no-figures is given.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from .data import Dataset
from .em import EmConfig, fit_em
from .errors import CureMixError, InvalidInputError
from .inference import bootstrap_inference, pe_comparison
from .simulation import ScenarioConfig, run_monte_carlo, valid_cells
from .two_step import fit_two_step

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


class CliInputError(Exception):
    """Invalid file contents or request; maps to exit code 2."""


def _atomic_write(path: str, text: str):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as handle:
        handle.write(text)
    os.replace(tmp, path)


def _sibling(path: str, suffix: str) -> str:
    stem, _ = os.path.splitext(path)
    return stem + suffix


def read_dataset(path, time_col, status_col, incidence_cols, latency_cols) -> Dataset:
    """Parse a UTF-8 comma-separated file with a header row.

    Referenced cells must be numeric with '.' decimals; the status column
    must be 0 or 1. Rows with missing referenced cells are rejected with
    their coordinates (no imputation).
    """
    needed = [time_col, status_col, *incidence_cols, *latency_cols]
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CliInputError(f"cannot read input file: {exc}") from exc
    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for col in needed:
            if col not in header:
                raise CliInputError(f"missing column '{col}' in {path}")
        times, status, x_rows, z_rows = [], [], [], []
        for line_no, row in enumerate(reader, start=2):
            values = {}
            for col in needed:
                cell = row.get(col)
                if cell is None or cell.strip() == "":
                    raise CliInputError(
                        f"missing value at line {line_no}, column '{col}'"
                    )
                try:
                    values[col] = float(cell)
                except ValueError as exc:
                    raise CliInputError(
                        f"non-numeric value {cell!r} at line {line_no}, column '{col}'"
                    ) from exc
            if values[status_col] not in (0.0, 1.0):
                raise CliInputError(
                    f"status must be 0 or 1; got {values[status_col]:g} "
                    f"at line {line_no}, column '{status_col}'"
                )
            times.append(values[time_col])
            status.append(int(values[status_col]))
            x_rows.append([values[c] for c in incidence_cols])
            z_rows.append([values[c] for c in latency_cols])
    if not times:
        raise CliInputError(f"no data rows in {path}")
    try:
        return Dataset(times, status, np.asarray(x_rows), np.asarray(z_rows))
    except InvalidInputError as exc:
        raise CliInputError(str(exc)) from exc


def _split_cols(spec: str) -> list:
    cols = [c.strip() for c in spec.split(",") if c.strip()]
    if not cols:
        raise CliInputError("empty column list")
    return cols


def _estimator_block(fit, incidence_names, latency_names, report=None):
    k = len(incidence_names)
    se = p = [None] * (k + len(latency_names))
    if report is not None:
        se = [float(v) for v in report.standard_errors]
        p = [None if not np.isfinite(v) else float(v) for v in report.p_values]
    estimates = [float(v) for v in np.concatenate([fit.gamma, fit.beta])]
    names = incidence_names + latency_names
    entries = [
        {"covariate": nm, "estimate": est, "se": s, "p_value": pv}
        for nm, est, s, pv in zip(names, estimates, se, p)
    ]
    return {"incidence": entries[:k], "latency": entries[k:]}


def _format_fit_table(estimator: str, block: dict) -> str:
    lines = [f"estimator: {estimator}"]
    for component in ("incidence", "latency"):
        lines.append(component)
        lines.append(f"  {'covariate':<14} {'estimate':>10} {'SE':>10} {'p-value':>10}")
        for e in block[component]:
            se = f"{e['se']:.4f}" if e["se"] is not None else "-"
            pv = f"{e['p_value']:.4g}" if e["p_value"] is not None else "-"
            lines.append(
                f"  {e['covariate']:<14} {e['estimate']:>10.4f} {se:>10} {pv:>10}"
            )
    return "\n".join(lines)


def cmd_fit(args) -> int:
    incidence_cols = _split_cols(args.incidence)
    latency_cols = _split_cols(args.latency)
    dataset = read_dataset(args.input, args.time, args.status,
                           incidence_cols, latency_cols)
    estimators = ["em", "two_step"] if args.estimator == "both" else [args.estimator]
    incidence_names = ["Intercept", *incidence_cols]

    blocks = {}
    diagnostics = {}
    for estimator in estimators:
        if estimator == "em":
            fit = fit_em(dataset)
            diagnostics[estimator] = {
                "converged": bool(fit.converged),
                "n_iterations": int(fit.n_iterations),
            }
        else:
            preliminary = fit_em(dataset)
            fit = fit_two_step(
                dataset, preliminary,
                trim_threshold=args.trim,
                bandwidth_override=args.bandwidth,
            )
            diagnostics[estimator] = {
                "bandwidth": float(fit.bandwidth),
                "preliminary_converged": bool(preliminary.converged),
            }
        report = None
        if args.bootstrap > 0:
            report = bootstrap_inference(
                dataset, estimator, n_bootstrap=args.bootstrap, seed=args.seed,
                trim_threshold=args.trim,
            )
            diagnostics[estimator]["bootstrap"] = {
                "n": report.n_bootstrap,
                "n_failed": report.n_bootstrap_failed,
            }
        blocks[estimator] = _estimator_block(fit, incidence_names, latency_cols, report)

    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "fit",
        "input": args.input,
        "n": dataset.n,
        "seed": args.seed,
        "bootstrap": args.bootstrap,
        "trim_threshold": args.trim,
        "bandwidth_override": args.bandwidth,
        "estimators": {
            est: {**blocks[est], "diagnostics": diagnostics[est]}
            for est in estimators
        },
    }

    for est in estimators:
        print(_format_fit_table(est, blocks[est]))
        print()
    if args.out:
        _atomic_write(args.out, json.dumps(payload, indent=2) + "\n")
        print(f"report written to {args.out}")
        if args.figures:
            from .figures import fit_estimates_figure, km_figure

            km_path = _sibling(args.out, "_km.png")
            km_figure(dataset, km_path)
            est_path = _sibling(args.out, "_estimates.png")
            fit_estimates_figure(blocks, est_path)
            print(f"figures written to {km_path}, {est_path}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        config = ScenarioConfig(
            model=args.model,
            scenario=args.scenario,
            n=args.n,
            misspecify_latency_covariates=args.misspecify,
        )
    except InvalidInputError as exc:
        raise CliInputError(f"{exc}") from exc
    estimators = ("em", "two_step") if args.estimators == "both" else (args.estimators,)
    report = run_monte_carlo(
        config, args.reps, estimators=estimators, rng_seed=args.seed,
    )
    print(report.summary_text())
    _atomic_write(args.out, report.csv_text())
    _atomic_write(_sibling(args.out, ".json"), report.json_text() + "\n")
    print(f"report written to {args.out}")
    if args.figures:
        from .figures import simulation_figure

        fig_path = _sibling(args.out, ".png")
        simulation_figure(report, fig_path)
        print(f"figure written to {fig_path}")
    return EXIT_OK


def cmd_pe(args) -> int:
    incidence_cols = _split_cols(args.incidence)
    latency_cols = _split_cols(args.latency)
    dataset = read_dataset(args.input, args.time, args.status,
                           incidence_cols, latency_cols)
    results = pe_comparison(dataset, args.splits, seed=args.seed,
                            trim_threshold=args.trim)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["split", "pe_two_step", "pe_em", "difference"])
    diffs = []
    for r in results:
        d = r.pe_two_step - r.pe_em
        ok = np.isfinite(d)
        if ok:
            diffs.append(d)
        writer.writerow([
            r.split_seed,
            repr(r.pe_two_step) if np.isfinite(r.pe_two_step) else "",
            repr(r.pe_em) if np.isfinite(r.pe_em) else "",
            repr(d) if ok else "",
        ])
    _atomic_write(args.out, buf.getvalue())

    diffs = np.asarray(diffs)
    if diffs.size:
        frac_neg = float(np.mean(diffs < 0))
        print(
            f"{diffs.size} valid splits: median difference {np.median(diffs):+.4f}, "
            f"fraction favoring 2-step {frac_neg:.3f}"
        )
    else:
        print("no valid splits")
    print(f"report written to {args.out}")
    if args.figures and diffs.size:
        from .figures import pe_difference_figure

        fig_path = _sibling(args.out, ".png")
        pe_difference_figure(diffs, fig_path)
        print(f"figure written to {fig_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curemix",
        description="mixture cure models: EM and presmoothing 2-step estimators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit estimators to a CSV dataset")
    fit.add_argument("--input", required=True)
    fit.add_argument("--time", required=True, help="follow-up time column")
    fit.add_argument("--status", required=True, help="event indicator column (0/1)")
    fit.add_argument("--incidence", required=True,
                     help="comma-separated incidence covariate columns")
    fit.add_argument("--latency", required=True,
                     help="comma-separated latency covariate columns")
    fit.add_argument("--estimator", choices=["em", "two_step", "both"], default="both")
    fit.add_argument("--bootstrap", type=int, default=0,
                     help="bootstrap resamples for SEs (0 = skip inference)")
    fit.add_argument("--trim", type=float, default=0.0,
                     help="index-density trimming threshold")
    fit.add_argument("--bandwidth", type=float, default=None,
                     help="bandwidth override (default: cross-validated)")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", default=None, help="JSON report path")
    fit.add_argument("--no-figures", dest="figures", action="store_false")
    fit.set_defaults(func=cmd_fit)

    sim = sub.add_parser("simulate", help="Monte Carlo study for a scenario cell")
    sim.add_argument("--model", type=int, required=True)
    sim.add_argument("--scenario", type=int, default=1)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--reps", type=int, required=True)
    sim.add_argument("--estimators", choices=["em", "two_step", "both"], default="both")
    sim.add_argument("--misspecify", action="store_true",
                     help="model 4: fit the latency on the incidence covariates")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="CSV report path")
    sim.add_argument("--no-figures", dest="figures", action="store_false")
    sim.set_defaults(func=cmd_simulate)

    pe = sub.add_parser("pe", help="prediction-error comparison over random splits")
    pe.add_argument("--input", required=True)
    pe.add_argument("--time", required=True)
    pe.add_argument("--status", required=True)
    pe.add_argument("--incidence", required=True)
    pe.add_argument("--latency", required=True)
    pe.add_argument("--splits", type=int, required=True)
    pe.add_argument("--trim", type=float, default=0.0)
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--out", required=True, help="per-split CSV path")
    pe.add_argument("--no-figures", dest="figures", action="store_false")
    pe.set_defaults(func=cmd_pe)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (CliInputError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CureMixError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
