"""Command-line front end.

Subcommands mirror the four user tasks: ``test`` runs the break test on a
CSV file, ``critvals`` simulates critical-value tables, ``mc`` drives Monte
Carlo experiments from a JSON config, and ``envelope`` computes the power
envelope used to calibrate the exponential weight constant.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .break_process import DEFAULT_STEP, compute_break_process, make_grid
from .design import DesignSpec, RawSample, build_design
from .exceptions import (ColumnMissingError, ConfigError, DataError,
                         NonNumericCellError, NumericalError, StrucbreakError)
from .har import KernelSpec, har_estimate
from .montecarlo import (DgpSpec, EnvelopeConfig, ExperimentConfig,
                         InnovationSpec, config_digest, power_envelope,
                         run_experiment)
from .null_sim import (DEFAULT_N_GRID, DEFAULT_REPS, LimitPathConfig,
                       limit_functional_draws, table_critical_values,
                       trimmed_indices, write_critical_value_table)
from .test_stats import TestSpec, compute_statistic, decide, report_from_table

REPORT_SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def ingest_csv(path, response, covariates=()):
    """Read a header CSV into a RawSample.

    Every referenced cell must parse as a finite number; the first offending
    cell aborts ingestion with its 1-based data row and column name.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open input file: {path}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path} has no header row")
        for col in [response, *covariates]:
            if col not in reader.fieldnames:
                raise ColumnMissingError(f"column {col!r} not in {path} "
                                         f"(columns: {reader.fieldnames})")
        y = []
        Z = []
        for i, row in enumerate(reader, start=1):
            vals = []
            for col in [response, *covariates]:
                cell = (row.get(col) or "").strip()
                try:
                    val = float(cell)
                except ValueError:
                    raise NonNumericCellError(i, col) from None
                if not np.isfinite(val):
                    raise NonNumericCellError(i, col)
                vals.append(val)
            y.append(vals[0])
            Z.append(vals[1:])
    if not y:
        raise DataError(f"{path} contains no data rows")
    return RawSample(y=np.asarray(y), Z=np.asarray(Z).reshape(len(y), -1))


def write_sample_csv(path, sample, response="y", covariates=None):
    """Write a RawSample with 17 significant digits (lossless round trip)."""
    covariates = covariates or [f"z{j + 1}" for j in range(sample.k)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([response, *covariates])
        for i in range(sample.n):
            writer.writerow([f"{sample.y[i]:.17g}",
                             *(f"{v:.17g}" for v in sample.Z[i])])


# ---------------------------------------------------------------------------
# test subcommand
# ---------------------------------------------------------------------------

def _parse_levels(text):
    try:
        levels = tuple(float(tok) for tok in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse levels {text!r}") from None
    if not levels or not all(0.0 < a < 1.0 for a in levels):
        raise ConfigError("levels must lie strictly between 0 and 1")
    return levels


def _test_config_dict(args):
    return {
        "input": args.input, "response": args.response,
        "covariates": list(args.covariates), "design": args.design,
        "degree": args.degree, "ar_order": args.ar_order,
        "include_intercept": not args.no_intercept,
        "gamma_star": args.gamma_star, "step": args.step,
        "variance_mode": args.variance_mode, "kernel": args.kernel,
        "a0": args.a0, "zeta_mode": args.zeta_mode, "test": args.test,
        "c": args.c, "critical_values": args.critical_values,
        "levels": list(args.levels), "n_grid": args.n_grid,
        "cv_reps": args.cv_reps, "seed": args.seed,
    }


def _run_test(args):
    covariates = args.covariates
    if args.design == "ar":
        if covariates:
            raise ConfigError("AR mode does not take covariate columns")
        sample = ingest_csv(args.input, args.response)
        spec = DesignSpec.ar_lags(args.ar_order)
    else:
        if not covariates:
            raise ConfigError("regression designs need --covariates")
        sample = ingest_csv(args.input, args.response, covariates)
        spec = (DesignSpec.polynomial(args.degree) if args.design == "polynomial"
                else DesignSpec.raw_columns(not args.no_intercept))

    dm, y_eff = build_design(sample, spec)
    grid = make_grid(args.gamma_star, args.step)
    bp = compute_break_process(dm, y_eff, grid, args.variance_mode)
    kernel = KernelSpec(args.kernel, args.a0)
    har = har_estimate(dm, y_eff, kernel, args.variance_mode, args.zeta_mode)
    test_spec = TestSpec(args.test, args.c)
    stat, gamma_hat = compute_statistic(bp, har, test_spec)

    warnings = []
    if args.kernel == "none":
        warnings.append("uncorrected: serial-correlation factor fixed at 1; "
                        "sizes can be distorted under nonlinear serial dependence")
    if har.floored:
        warnings.append("serial-correlation factor was floored at 1e-4")

    if test_spec.functional in ("sup", "avg") and args.critical_values == "bundled":
        cvs = table_critical_values(args.gamma_star, test_spec.functional,
                                    args.levels, args.table)
        report = report_from_table(stat, cvs, test_spec.functional, v_hat=har.v_hat,
                                   gamma_hat=gamma_hat, warnings=warnings)
    else:
        cfg = LimitPathConfig(gamma_star=args.gamma_star, functional=test_spec,
                              n_grid=args.n_grid, reps=args.cv_reps,
                              seed=args.seed, p_dim=dm.p)
        null = limit_functional_draws(cfg)
        report = decide(stat, null, args.levels, spec=test_spec, v_hat=har.v_hat,
                        gamma_hat=gamma_hat, warnings=warnings)

    config = _test_config_dict(args)
    payload = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config": config,
        "config_hash": config_digest(config),
        "data": {"n": sample.n, "k": sample.k},
        "design": {"kind": spec.kind, "p": dm.p, "n_eff": dm.n_eff,
                   "labels": list(dm.labels)},
        "grid": {"gamma_star": args.gamma_star, "step": args.step,
                 "n_points": len(grid)},
        "variance_mode": args.variance_mode,
        "har": {"kernel": kernel.kind, "a0": kernel.a0, "bandwidth": har.bandwidth,
                "zeta_mode": args.zeta_mode, "v_hat": har.v_hat,
                "floored": har.floored},
        "test": {"functional": report.functional, "c": report.c,
                 "statistic": report.statistic, "gamma_hat": report.gamma_hat,
                 "critical_values": {f"{a:g}": cv for a, cv
                                     in report.critical_values.items()},
                 "p_value": report.p_value,
                 "decisions": {f"{a:g}": d for a, d in report.decisions.items()}},
        "warnings": report.warnings,
    }

    out = _open_output(args.output)
    try:
        if args.format == "json":
            out.write(json.dumps(payload, sort_keys=True, indent=2))
            out.write("\n")
        elif args.format == "csv-plotdata":
            writer = csv.writer(out)
            writer.writerow(["gamma", "wald", "q"])
            for g, w, q in zip(grid.points, bp.wald, bp.q):
                writer.writerow([f"{g:.17g}", f"{w:.17g}", f"{q:.17g}"])
        else:
            out.write(_format_text_report(payload))
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _format_text_report(payload):
    test = payload["test"]
    lines = [
        f"structural break test ({test['functional']})",
        f"  n = {payload['data']['n']}, n_eff = {payload['design']['n_eff']}, "
        f"p = {payload['design']['p']}",
        f"  trimming [{payload['grid']['gamma_star']:g}, "
        f"{1 - payload['grid']['gamma_star']:g}], "
        f"{payload['grid']['n_points']} grid points",
        f"  variance mode: {payload['variance_mode']}; kernel: "
        f"{payload['har']['kernel']} (a0={payload['har']['a0']:g}, "
        f"bandwidth={payload['har']['bandwidth']})",
        f"  serial-correlation factor: {payload['har']['v_hat']:.4f}",
        f"  statistic = {test['statistic']:.4f}",
    ]
    if test["gamma_hat"] is not None:
        lines.append(f"  estimated break fraction = {test['gamma_hat']:.4f}")
    for level, cv in sorted(test["critical_values"].items(), key=lambda kv: float(kv[0])):
        verdict = "REJECT" if test["decisions"][level] else "fail to reject"
        lines.append(f"  level {float(level):>5.2f}: critical value {cv:.4f} -> {verdict}")
    if test["p_value"] is not None:
        lines.append(f"  p-value = {test['p_value']:.4f}")
    for w in payload["warnings"]:
        lines.append(f"  warning: {w}")
    return "\n".join(lines) + "\n"


def _open_output(path):
    if path in (None, "-"):
        return sys.stdout
    return open(path, "w", newline="")


# ---------------------------------------------------------------------------
# critvals subcommand
# ---------------------------------------------------------------------------

def _run_critvals(args):
    levels = args.levels
    entries = {}
    rng_seed = args.seed
    for gs in args.gamma_star:
        idx = trimmed_indices(args.n_grid, gs)
        rng = np.random.default_rng(np.random.SeedSequence((rng_seed, int(gs * 1e6))))
        sups = np.empty(args.reps)
        avgs = np.empty(args.reps)
        chunk = 512
        for start in range(0, args.reps, chunk):
            stop = min(start + chunk, args.reps)
            q = rng.standard_normal((stop - start, idx.size))
            sups[start:stop] = q.max(axis=1)
            avgs[start:stop] = q.mean(axis=1)
        for level in levels:
            entries[(gs, level)] = {
                "sup": float(np.quantile(sups, 1.0 - level)),
                "avg": float(np.quantile(avgs, 1.0 - level)),
            }
    out = _open_output(args.output)
    try:
        if args.format == "csv":
            writer = csv.writer(out)
            writer.writerow(["gamma_star", "level", "sup_cv", "avg_cv"])
            for (gs, level) in sorted(entries):
                cvs = entries[(gs, level)]
                writer.writerow([f"{gs:.2f}", f"{level:.2f}", f"{cvs['sup']:.4f}",
                                 f"{cvs['avg']:.4f}"])
        else:
            out.write(f"{'gamma*':>8} {'level':>6} {'sup':>8} {'avg':>8}\n")
            for (gs, level) in sorted(entries):
                cvs = entries[(gs, level)]
                out.write(f"{gs:>8.2f} {level:>6.2f} {cvs['sup']:>8.4f} "
                          f"{cvs['avg']:>8.4f}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# mc subcommand
# ---------------------------------------------------------------------------

def _experiment_config_from_json(payload):
    try:
        dgp_raw = dict(payload["dgp"])
        innovation = InnovationSpec(**dgp_raw.pop("innovation", {"kind": "iid"}))
        dgp = DgpSpec(innovation=innovation, **dgp_raw)
        design = DesignSpec(**payload["design"])
        kernels = tuple(KernelSpec(**k) for k in payload.get(
            "kernels", [{"kind": "parzen", "a0": 14.0}]))
        tests = tuple(TestSpec(**t) for t in payload.get(
            "tests", [{"functional": "sup"}]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed experiment config: {exc}") from exc
    return ExperimentConfig(
        dgp=dgp, design=design,
        gamma_star=payload.get("gamma_star", 0.35),
        step=payload.get("step", DEFAULT_STEP),
        variance_mode=payload.get("variance_mode", "homoskedastic"),
        zeta_mode=payload.get("zeta_mode", "ones"),
        kernels=kernels, tests=tests,
        levels=tuple(payload.get("levels", [0.05])),
        reps=payload.get("reps", 500),
        seed=payload.get("seed", 0),
        critical_values=payload.get("critical_values", "bundled"),
        cv_reps=payload.get("cv_reps", DEFAULT_REPS),
        n_grid=payload.get("n_grid", DEFAULT_N_GRID),
        table_path=payload.get("table_path"),
    )


def _run_mc(args):
    try:
        with open(args.config) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot open config file: {args.config}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    config = _experiment_config_from_json(payload)
    result = run_experiment(config)
    out = _open_output(args.output)
    try:
        if args.format == "csv":
            writer = csv.writer(out)
            for row in result.csv_rows():
                writer.writerow(row)
        else:
            out.write(result.format_table())
            out.write(f"\nseed={result.seed} reps={result.reps} "
                      f"config_hash={result.config_hash}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# envelope subcommand
# ---------------------------------------------------------------------------

def _run_envelope(args):
    config = EnvelopeConfig(n=args.n, degree=args.degree, gamma_star=args.gamma_star,
                            reps=args.reps, null_reps=args.null_reps,
                            c_min=args.c_min, c_max=args.c_max, c_step=args.c_step,
                            level=args.level, seed=args.seed)
    result = power_envelope(config)
    out = _open_output(args.output)
    try:
        writer = csv.writer(out)
        writer.writerow(["c", "power", "critical_value"])
        for c, pw, cv in zip(result.c_grid, result.power, result.critical_values):
            writer.writerow([f"{c:.2f}", f"{pw:.4f}", f"{cv:.6f}"])
        out.write(f"# solution P(c)=1/2 at c = {result.solution:.4f}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="strucbreak",
                     description="Structural break tests for growing-dimension regressions")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run the break test on a CSV file")
    t.add_argument("--input", required=True)
    t.add_argument("--response", required=True)
    t.add_argument("--covariates", type=lambda s: tuple(s.split(",")) if s else (),
                   default=())
    t.add_argument("--design", choices=("polynomial", "raw", "ar"), default="polynomial")
    t.add_argument("--degree", type=int, default=2)
    t.add_argument("--ar-order", type=int, default=1)
    t.add_argument("--no-intercept", action="store_true")
    t.add_argument("--gamma-star", type=float, default=0.35)
    t.add_argument("--step", type=float, default=DEFAULT_STEP)
    t.add_argument("--variance-mode", choices=("homoskedastic", "eicker-white"),
                   default="homoskedastic")
    t.add_argument("--kernel", choices=("parzen", "bartlett", "none"), default="parzen")
    t.add_argument("--a0", type=float, default=14.0)
    t.add_argument("--zeta-mode", choices=("ones", "last-obs"), default="ones")
    t.add_argument("--test", choices=("sup", "avg", "expq", "expw"), default="sup")
    t.add_argument("--c", type=float, default=15.0)
    t.add_argument("--critical-values", choices=("bundled", "simulate"),
                   default="bundled")
    t.add_argument("--table", default=None)
    t.add_argument("--levels", type=_parse_levels, default=(0.01, 0.05, 0.10))
    t.add_argument("--n-grid", type=int, default=DEFAULT_N_GRID)
    t.add_argument("--cv-reps", type=int, default=DEFAULT_REPS)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--format", choices=("text", "json", "csv-plotdata"), default="text")
    t.add_argument("--output", default=None)
    t.set_defaults(func=_run_test)

    cv = sub.add_parser("critvals", help="simulate critical-value tables")
    cv.add_argument("--gamma-star", type=lambda s: tuple(float(x) for x in s.split(",")),
                    default=(0.35,))
    cv.add_argument("--levels", type=_parse_levels, default=(0.01, 0.05, 0.10))
    cv.add_argument("--n-grid", type=int, default=DEFAULT_N_GRID)
    cv.add_argument("--reps", type=int, default=DEFAULT_REPS)
    cv.add_argument("--seed", type=int, default=0)
    cv.add_argument("--format", choices=("csv", "text"), default="csv")
    cv.add_argument("--output", default=None)
    cv.set_defaults(func=_run_critvals)

    mc = sub.add_parser("mc", help="run Monte Carlo experiments from a JSON config")
    mc.add_argument("--config", required=True)
    mc.add_argument("--format", choices=("csv", "text"), default="text")
    mc.add_argument("--output", default=None)
    mc.set_defaults(func=_run_mc)

    env = sub.add_parser("envelope", help="power envelope for the weight constant")
    env.add_argument("--n", type=int, default=300)
    env.add_argument("--degree", type=int, default=2)
    env.add_argument("--gamma-star", type=float, default=0.35)
    env.add_argument("--reps", type=int, default=300)
    env.add_argument("--null-reps", type=int, default=1000)
    env.add_argument("--c-min", type=float, default=12.0)
    env.add_argument("--c-max", type=float, default=18.0)
    env.add_argument("--c-step", type=float, default=0.05)
    env.add_argument("--level", type=float, default=0.01)
    env.add_argument("--seed", type=int, default=0)
    env.add_argument("--output", default=None)
    env.set_defaults(func=_run_envelope)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except StrucbreakError as exc:  # fallback, treat as config
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
