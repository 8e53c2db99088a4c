"""Command-line surface: analyze, simulate, experiment, fixtures."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymcov import direct_estimate, standard_errors
from .bootstrap import MBBConfig, bootstrap_sd, default_block_size
from .dgp import fixture, fixture_checksum, fixture_json, simulate
from .eigen import (
    ConvergenceError,
    DegenerateEigenvaluesError,
    eigendecompose,
    proportion_of_variation,
)
from .experiments import ESTIMATION_METHODS, THEORY_METHODS, run_comparison
from .inference import (
    loading_table,
    loading_test_json,
    proportion_ci,
    render_csv,
    render_text,
    test_loadings,
)
from .series import MultivariateSeries, sample_covariance

EXIT_OK = 0
EXIT_MALFORMED = 2
EXIT_DEGENERATE = 3
EXIT_PRECONDITION = 4

_PROFILES = {"desk": (2000, 500, 500), "full": (5000, 2000, 500)}

_ANALYZE_DEFAULTS = {
    "method": "ind",
    "bandwidth": None,
    "block_size": None,
    "replicates": 500,
    "alpha": 0.05,
    "seed": 0,
    "out": "tspca-out",
    "columns": None,
    "threads": None,
}

_EXPERIMENT_DEFAULTS = {
    "profile": "desk",
    "dgps": "1,2",
    "methods": ",".join(THEORY_METHODS + ESTIMATION_METHODS),
    "bandwidth": None,
    "block_size": None,
    "seed": 0,
    "out": "tspca-experiment",
    "threads": None,
}


class MalformedInputError(Exception):
    pass


class PreconditionError(Exception):
    pass


def _fail(tag: str, message: str) -> None:
    flat = " ".join(str(message).split())
    print(f"tspca: error={tag} detail={flat}", file=sys.stderr)


def _read_returns_csv(path: str, columns=None):
    """Parse a header + numeric rows CSV; a leading non-numeric column is
    treated as dates and skipped."""
    file_path = Path(path)
    if not file_path.is_file():
        raise MalformedInputError(f"input file not found: {path}")
    with file_path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedInputError("empty input file") from None
        rows = [row for row in reader if row]
    if not header or not rows:
        raise MalformedInputError("need a header row and at least one data row")
    width = len(header)
    if any(len(row) != width for row in rows):
        raise MalformedInputError("ragged rows: all rows must match the header width")

    def is_number(cell: str) -> bool:
        try:
            return math.isfinite(float(cell))
        except ValueError:
            return False

    start = 0
    if width >= 2 and not is_number(rows[0][0]):
        start = 1  # leading date column
    names = [h.strip() for h in header[start:]]
    if not names:
        raise MalformedInputError("no numeric columns found")
    if columns:
        missing = [c for c in columns if c not in names]
        if missing:
            raise MalformedInputError(f"unknown columns requested: {missing}")
        keep = [names.index(c) for c in columns]
        names = list(columns)
    else:
        keep = list(range(len(names)))
    data = np.empty((len(rows), len(keep)))
    for i, row in enumerate(rows):
        cells = row[start:]
        for j, col in enumerate(keep):
            cell = cells[col].strip()
            try:
                value = float(cell)
            except ValueError:
                raise MalformedInputError(
                    f"non-numeric cell at data row {i + 1}, column {names[j]!r}: {cell!r}"
                ) from None
            if not math.isfinite(value):
                raise MalformedInputError(
                    f"non-finite cell at data row {i + 1}, column {names[j]!r}"
                )
            data[i, j] = value
    return names, data


def _merge_config(defaults: dict, config_path, cli_values: dict) -> dict:
    merged = dict(defaults)
    if config_path:
        path = Path(config_path)
        if not path.is_file():
            raise MalformedInputError(f"config file not found: {config_path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise MalformedInputError(f"config file is not valid JSON: {exc}") from None
        unknown = [k for k in loaded if k not in defaults]
        if unknown:
            raise MalformedInputError(f"unknown config keys: {unknown}")
        merged.update(loaded)
    for key, value in cli_values.items():
        if key in merged and value is not None:
            merged[key] = value
    return merged


def _resolve_threads(value) -> int:
    if value is None:
        value = os.environ.get("TSPCA_THREADS", "1")
    try:
        threads = int(value)
    except (TypeError, ValueError):
        raise PreconditionError(f"threads must be an integer, got {value!r}") from None
    if threads < 1:
        raise PreconditionError("threads must be at least 1")
    return threads


def _write_matrix_csv(path: Path, names, matrix, row_prefix="PC") -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["component", *names])
        for k, row in enumerate(matrix):
            writer.writerow([f"{row_prefix}{k + 1}", *[f"{v:.10g}" for v in row]])


def _cmd_analyze(args) -> int:
    cfg = _merge_config(
        _ANALYZE_DEFAULTS,
        args.config,
        {
            "method": args.method,
            "bandwidth": args.bandwidth,
            "block_size": args.block_size,
            "replicates": args.replicates,
            "alpha": args.alpha,
            "seed": args.seed,
            "out": args.out,
            "columns": args.columns,
            "threads": args.threads,
        },
    )
    method = cfg["method"]
    if method not in ("ad", "dag", "ind", "bootstrap"):
        raise PreconditionError(f"unknown method {method!r}")
    alpha = float(cfg["alpha"])
    if not 0 < alpha <= 0.5:
        raise PreconditionError("alpha must be in (0, 0.5]")
    _resolve_threads(cfg["threads"])  # validated; analysis itself is single-pass

    columns = cfg["columns"].split(",") if cfg["columns"] else None
    names, data = _read_returns_csv(args.input, columns)
    try:
        series = MultivariateSeries(data)
    except ValueError as exc:
        raise MalformedInputError(str(exc)) from None
    n = series.n

    if method == "bootstrap":
        replicates = int(cfg["replicates"])
        if replicates < 2:
            raise PreconditionError("bootstrap needs at least 2 replicates")
        block = int(cfg["block_size"]) if cfg["block_size"] is not None else default_block_size(n)
        if not 1 <= block <= n:
            raise PreconditionError(f"block size must be in [1, n={n}]")
        result = bootstrap_sd(series, MBBConfig(block, replicates, int(cfg["seed"])))
        decomp = result.point
        sd_values, sd_loadings, sd_r = result.sd_values, result.sd_loadings, result.sd_r
        method_detail = {"block_size": block, "replicates": result.replicate_count}
    else:
        bandwidth = cfg["bandwidth"]
        if bandwidth is not None:
            bandwidth = int(bandwidth)
            if not 1 <= bandwidth <= n // 4:
                raise PreconditionError(
                    f"bandwidth must be in [1, n//4={n // 4}], got {bandwidth}"
                )
        asym = direct_estimate(series, method, bandwidth)
        se = standard_errors(asym)
        decomp = eigendecompose(sample_covariance(series))
        sd_values, sd_loadings, sd_r = se.sd_values, se.sd_loadings, se.sd_r
        method_detail = {"bandwidth": bandwidth}

    try:
        prop = proportion_of_variation(decomp.values)
    except ValueError as exc:
        raise DegenerateEigenvaluesError(str(exc)) from None
    ci = proportion_ci(prop, sd_r, alpha)
    tests = test_loadings(decomp, sd_loadings, alpha)
    table = loading_table(tests, names)

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    with (out / "eigenvalues.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["component", "value", "sd"])
        for k in range(series.p):
            writer.writerow([f"PC{k + 1}", f"{decomp.values[k]:.10g}", f"{sd_values[k]:.10g}"])
    _write_matrix_csv(out / "loadings.csv", names, decomp.vectors.T)
    _write_matrix_csv(out / "loading_sd.csv", names, sd_loadings)
    with (out / "proportions.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["component", "r", "sd", "lower", "upper"])
        for k in range(series.p):
            writer.writerow(
                [
                    f"PC{k + 1}",
                    f"{prop.r[k]:.10g}",
                    f"{sd_r[k]:.10g}",
                    f"{ci.lower[k]:.10g}",
                    f"{ci.upper[k]:.10g}",
                ]
            )
    (out / "significance.csv").write_text(render_csv(table))
    (out / "significance.txt").write_text(render_text(table))
    analysis = {
        "version": __version__,
        "method": method,
        "n": n,
        "p": series.p,
        "variables": names,
        "eigenvalues": decomp.values.tolist(),
        "sd_eigenvalues": sd_values.tolist(),
        "loadings": decomp.vectors.T.tolist(),
        "sd_loadings": sd_loadings.tolist(),
        "proportions": prop.r.tolist(),
        "sd_proportions": sd_r.tolist(),
        "ci_lower": ci.lower.tolist(),
        "ci_upper": ci.upper.tolist(),
        "loading_tests": loading_test_json(tests, names),
        **method_detail,
    }
    (out / "analysis.json").write_text(json.dumps(analysis, indent=2))
    effective = dict(cfg)
    effective["input"] = args.input
    (out / "config.json").write_text(json.dumps(effective, indent=2))

    sig_counts = tests.significant.sum(axis=1)
    print(f"analyzed {n} observations of {series.p} variables (method={method})")
    print("proportion of variation:", ", ".join(f"{v:.3f}" for v in prop.r))
    print(
        "significant loadings per component:",
        ", ".join(str(int(c)) for c in sig_counts),
    )
    print(f"outputs written to {out}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    try:
        spec = fixture(args.dgp)
    except ValueError as exc:
        raise MalformedInputError(str(exc)) from None
    if args.n < 2:
        raise PreconditionError("n must be at least 2")
    series = simulate(spec, args.n, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = [f"X{i + 1}" for i in range(series.p)]
    with (out / "series.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(names)
        for row in series.data:
            writer.writerow([f"{v:.17g}" for v in row])
    meta = {
        "dgp_id": args.dgp,
        "n": args.n,
        "seed": args.seed,
        "columns": names,
        "fixture_checksum": fixture_checksum(args.dgp),
        "version": __version__,
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2))
    print(f"wrote {series.n}x{series.p} series to {out / 'series.csv'}")
    return EXIT_OK


def _cmd_experiment(args) -> int:
    cfg = _merge_config(
        _EXPERIMENT_DEFAULTS,
        args.config,
        {
            "profile": args.profile,
            "dgps": args.dgps,
            "methods": args.methods,
            "bandwidth": args.bandwidth,
            "block_size": args.block_size,
            "seed": args.seed,
            "out": args.out,
            "threads": args.threads,
        },
    )
    if cfg["profile"] not in _PROFILES:
        raise PreconditionError(f"unknown profile {cfg['profile']!r}")
    n, big_n, replicates = _PROFILES[cfg["profile"]]
    try:
        dgp_ids = [int(tok) for tok in str(cfg["dgps"]).split(",") if tok.strip()]
    except ValueError:
        raise PreconditionError(f"cannot parse dgp list {cfg['dgps']!r}") from None
    bad = [i for i in dgp_ids if not 1 <= i <= 8]
    if bad:
        raise PreconditionError(f"dgp ids out of range 1..8: {bad}")
    methods = tuple(tok for tok in str(cfg["methods"]).split(",") if tok.strip())
    unknown = [m for m in methods if m not in THEORY_METHODS + ESTIMATION_METHODS]
    if unknown:
        raise PreconditionError(f"unknown methods: {unknown}")
    threads = _resolve_threads(cfg["threads"])

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    results = run_comparison(
        dgp_ids,
        n=n,
        N=big_n,
        R=replicates,
        seed=int(cfg["seed"]),
        methods=methods,
        bandwidth=cfg["bandwidth"],
        block_size=cfg["block_size"],
        workers=threads,
        out_dir=out,
    )
    effective = dict(cfg)
    effective.update({"n": n, "N": big_n, "R": replicates})
    (out / "config.json").write_text(json.dumps(effective, indent=2))
    for dgp_id, res in sorted(results.items()):
        print(f"DGP {dgp_id}: mean absolute loading-sd difference ratios (percent)")
        for method, table in sorted(res.tables.items()):
            cells = ", ".join(f"{v:.2f}" for v in table.delta_tilde)
            print(f"  {method:>4}: {cells}")
    print(f"outputs written to {out}")
    return EXIT_OK


def _cmd_fixtures(args) -> int:
    payload = {}
    ids = [args.dgp] if args.dgp else list(range(1, 9))
    for dgp_id in ids:
        try:
            entry = fixture_json(dgp_id)
        except ValueError as exc:
            raise MalformedInputError(str(exc)) from None
        entry["checksum"] = fixture_checksum(dgp_id)
        payload[str(dgp_id)] = entry
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote fixtures to {args.out}")
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tspca",
        description="PCA for multivariate time series with dependence-aware inference",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="analyze a returns CSV")
    analyze.add_argument("--input", required=True, help="CSV with header row")
    analyze.add_argument("--method", choices=["ad", "dag", "ind", "bootstrap"])
    analyze.add_argument("--bandwidth", type=int, help="Daniell smoothing half-width")
    analyze.add_argument("--block-size", dest="block_size", type=int)
    analyze.add_argument("--replicates", type=int)
    analyze.add_argument("--alpha", type=float)
    analyze.add_argument("--seed", type=int)
    analyze.add_argument("--out")
    analyze.add_argument("--columns", help="comma-separated subset of column names")
    analyze.add_argument("--threads", type=int)
    analyze.add_argument("--config", help="JSON config file (flags win)")
    analyze.set_defaults(func=_cmd_analyze)

    simulate_cmd = sub.add_parser("simulate", help="simulate a benchmark model")
    simulate_cmd.add_argument("--dgp", type=int, required=True)
    simulate_cmd.add_argument("--n", type=int, required=True)
    simulate_cmd.add_argument("--seed", type=int, default=0)
    simulate_cmd.add_argument("--out", default="tspca-sim")
    simulate_cmd.set_defaults(func=_cmd_simulate)

    experiment = sub.add_parser("experiment", help="run the method comparison")
    experiment.add_argument("--profile", choices=["desk", "full"])
    experiment.add_argument("--dgps", help="comma-separated ids, e.g. 1,2,7")
    experiment.add_argument("--methods", help="subset of ad,dag,ind,de,be")
    experiment.add_argument("--bandwidth", type=int)
    experiment.add_argument("--block-size", dest="block_size", type=int)
    experiment.add_argument("--seed", type=int)
    experiment.add_argument("--out")
    experiment.add_argument("--threads", type=int)
    experiment.add_argument("--config", help="JSON config file (flags win)")
    experiment.set_defaults(func=_cmd_experiment)

    fixtures = sub.add_parser("fixtures", help="dump benchmark model definitions")
    fixtures.add_argument("--dgp", type=int)
    fixtures.add_argument("--out")
    fixtures.set_defaults(func=_cmd_fixtures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MalformedInputError as exc:
        _fail("malformed_input", str(exc))
        return EXIT_MALFORMED
    except (DegenerateEigenvaluesError, ConvergenceError) as exc:
        _fail("degenerate_eigenvalues", str(exc))
        return EXIT_DEGENERATE
    except PreconditionError as exc:
        _fail("method_precondition", str(exc))
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
