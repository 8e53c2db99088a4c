"""Monte Carlo harness: empirical distributions and method-comparison metrics.

One comparison run simulates N independent sample paths of a model, records
the empirical spread of eigenvalues, loadings, and variance proportions
(the "ED" reference), and lines it up against

* theoretical standard errors from the model-implied spectrum under each
  dependence assumption (``ad``, ``dag``, ``ind``), and
* per-sample estimates averaged over the same replicates: the spectral
  plug-in (``de``) and the moving block bootstrap (``be``).

Comparison metrics, all in percent:

* ``delta_r``      - difference of proportion-of-variation sds (percentage points),
* ``delta_star``   - ratio-minus-one of loading sds,
* ``delta_tilde``  - per-component mean absolute ``delta_star``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ._util import DOMAIN_EXPERIMENT, parallel_map, stream_rng
from .asymcov import asymptotics_ad, asymptotics_dag, asymptotics_ind, direct_estimate, standard_errors
from .bootstrap import MBBConfig, bootstrap_sd, default_block_size
from .dgp import DGPSpec, PopulationTruth, fixture, population_truth, simulate
from .eigen import ConvergenceError, DegenerateEigenvaluesError, align_signs, eigendecompose
from .series import sample_covariance
from .spectral import model_spectral_density, rotate_spectrum

__all__ = [
    "MonteCarloSummary",
    "MetricTable",
    "ComparisonResult",
    "run_monte_carlo",
    "delta_r",
    "delta_star",
    "delta_tilde",
    "run_comparison",
    "write_comparison_outputs",
    "THEORY_METHODS",
    "ESTIMATION_METHODS",
]

THEORY_METHODS = ("ad", "dag", "ind")
ESTIMATION_METHODS = ("de", "be")
_MAX_FAILURE_RATE = 0.01


@dataclass(frozen=True)
class MonteCarloSummary:
    """Empirical moments of the eigenstructure across simulation replicates."""

    replicates: int
    scale_n: int
    empirical_cov_values: np.ndarray  # covariance of sqrt(n)-scaled eigenvalue errors
    empirical_sd_loadings: np.ndarray  # [k, k'] = sd of element k' of component k
    empirical_sd_r: np.ndarray
    mean_values: np.ndarray
    mean_loadings: np.ndarray
    mean_r: np.ndarray

    def __post_init__(self):
        if self.replicates < 2:
            raise ValueError("a summary needs at least 2 replicates")
        cov = np.asarray(self.empirical_cov_values)
        if np.max(np.abs(cov - cov.T)) > 1e-10 * max(1.0, np.max(np.abs(cov))):
            raise ValueError("empirical covariance must be symmetric")


@dataclass(frozen=True)
class MetricTable:
    """Comparison metrics of one method against the empirical reference."""

    method: str
    delta_r: np.ndarray
    delta_star: np.ndarray
    delta_tilde: np.ndarray

    def __post_init__(self):
        recomputed = np.nanmean(np.abs(self.delta_star), axis=1)
        # delta_tilde must always equal the row-wise mean absolute delta_star
        if not np.allclose(recomputed, self.delta_tilde, rtol=1e-12, atol=1e-12, equal_nan=True):
            raise ValueError("delta_tilde is inconsistent with delta_star")


@dataclass(frozen=True)
class ComparisonResult:
    """Everything produced for one model: reference run, per-method sds, metrics."""

    dgp_id: int
    spec: DGPSpec
    truth: PopulationTruth
    summary: MonteCarloSummary
    method_sd_loadings: dict
    method_sd_r: dict
    cov_values: dict
    tables: dict


@dataclass(frozen=True)
class _ReplicateTask:
    spec: DGPSpec
    n: int
    seed: int
    rep: int
    reference: np.ndarray
    de_assumption: Optional[str]
    bandwidth: Optional[int]
    be_block: Optional[int]
    be_replicates: Optional[int]


def _replicate_stats(task: _ReplicateTask):
    """Simulate one path and compute everything requested for it."""
    series = simulate(task.spec, task.n, task.seed, replicate=task.rep)
    try:
        dec = eigendecompose(sample_covariance(series))
        if np.any(dec.values <= 0):
            raise DegenerateEigenvaluesError("nonpositive sample eigenvalue")
    except (ConvergenceError, DegenerateEigenvaluesError) as exc:
        return ("fail", task.rep, str(exc))
    dec = align_signs(dec, task.reference)
    partial = np.cumsum(dec.values)
    props = partial / partial[-1]

    de_loadings = de_r = None
    if task.de_assumption is not None:
        se = standard_errors(direct_estimate(series, task.de_assumption, task.bandwidth))
        de_loadings, de_r = se.sd_loadings, se.sd_r

    be_loadings = be_r = None
    if task.be_replicates is not None:
        boot_seed = int(
            stream_rng(task.seed, task.rep, DOMAIN_EXPERIMENT).integers(0, 2**63)
        )
        result = bootstrap_sd(
            series, MBBConfig(task.be_block, task.be_replicates, boot_seed)
        )
        be_loadings, be_r = result.sd_loadings, result.sd_r

    return ("ok", dec.values, dec.vectors.T.copy(), props, de_loadings, de_r, be_loadings, be_r)


def _aggregate(records, n: int, total: int) -> tuple:
    failures = [rec for rec in records if rec[0] == "fail"]
    if failures and len(failures) / total > _MAX_FAILURE_RATE:
        rep, message = failures[0][1], failures[0][2]
        raise RuntimeError(
            f"{len(failures)} of {total} replicates failed "
            f"(first failure at replicate {rep}: {message})"
        )
    kept = [rec for rec in records if rec[0] == "ok"]
    if len(kept) < 2:
        raise RuntimeError("fewer than 2 usable replicates")
    values = np.stack([rec[1] for rec in kept])
    loadings = np.stack([rec[2] for rec in kept])
    props = np.stack([rec[3] for rec in kept])
    summary = MonteCarloSummary(
        replicates=len(kept),
        scale_n=n,
        empirical_cov_values=n * np.cov(values.T, ddof=1),
        empirical_sd_loadings=loadings.std(axis=0, ddof=1),
        empirical_sd_r=props.std(axis=0, ddof=1),
        mean_values=values.mean(axis=0),
        mean_loadings=loadings.mean(axis=0),
        mean_r=props.mean(axis=0),
    )
    return summary, kept


def run_monte_carlo(
    spec: DGPSpec,
    n: int,
    N: int,
    seed: int,
    workers: int = 1,
    reference: Optional[np.ndarray] = None,
) -> MonteCarloSummary:
    """Empirical distribution of the eigenstructure over N simulated paths.

    Each replicate is simulated with its own deterministic stream, decomposed,
    and sign-aligned against the population eigenvectors (or ``reference``).
    Replicates with unresolved eigenstructure are dropped; more than 1%
    failing aborts.
    """
    if N < 2:
        raise ValueError("at least 2 replicates are required")
    if reference is None:
        reference = population_truth(spec).decomp.vectors
    tasks = [
        _ReplicateTask(spec, int(n), int(seed), rep, np.asarray(reference), None, None, None, None)
        for rep in range(int(N))
    ]
    records = parallel_map(_replicate_stats, tasks, workers)
    summary, _ = _aggregate(records, int(n), int(N))
    return summary


def delta_r(method_sd: np.ndarray, empirical_sd: np.ndarray) -> np.ndarray:
    """Difference of proportion-of-variation sds in percent, for k = 1..p-1.

    The last component is excluded: its proportion is identically 1.
    """
    method_sd = np.asarray(method_sd, dtype=float)
    empirical_sd = np.asarray(empirical_sd, dtype=float)
    if method_sd.shape != empirical_sd.shape:
        raise ValueError("sd vectors must have matching length")
    return 100.0 * (method_sd - empirical_sd)[:-1]


def delta_star(method_sd: np.ndarray, empirical_sd: np.ndarray) -> np.ndarray:
    """Ratio-minus-one of loading sds in percent; NaN flags zero empirical sd."""
    method_sd = np.asarray(method_sd, dtype=float)
    empirical_sd = np.asarray(empirical_sd, dtype=float)
    if method_sd.shape != empirical_sd.shape:
        raise ValueError("sd matrices must have matching shape")
    out = np.full(method_sd.shape, np.nan)
    ok = empirical_sd > 0
    out[ok] = 100.0 * (method_sd[ok] / empirical_sd[ok] - 1.0)
    return out


def delta_tilde(delta_star_matrix: np.ndarray) -> np.ndarray:
    """Per-component mean absolute difference ratio."""
    return np.nanmean(np.abs(np.asarray(delta_star_matrix, dtype=float)), axis=1)


def _metric_table(method: str, sd_loadings, sd_r, summary: MonteCarloSummary) -> MetricTable:
    star = delta_star(sd_loadings, summary.empirical_sd_loadings)
    return MetricTable(
        method=method,
        delta_r=delta_r(sd_r, summary.empirical_sd_r),
        delta_star=star,
        delta_tilde=delta_tilde(star),
    )


def _compare_one(
    dgp_id: int,
    spec: DGPSpec,
    n: int,
    N: int,
    R: int,
    seed: int,
    methods: Sequence[str],
    bandwidth: Optional[int],
    block_size: Optional[int],
    grid_size: int,
    workers: int,
) -> ComparisonResult:
    truth = population_truth(spec)
    want_de = "de" in methods
    want_be = "be" in methods
    be_block = (block_size or default_block_size(n)) if want_be else None
    tasks = [
        _ReplicateTask(
            spec,
            n,
            seed,
            rep,
            truth.decomp.vectors,
            "ad" if want_de else None,
            bandwidth,
            be_block,
            R if want_be else None,
        )
        for rep in range(N)
    ]
    records = parallel_map(_replicate_stats, tasks, workers)
    summary, kept = _aggregate(records, n, N)

    method_sd_loadings: dict = {}
    method_sd_r: dict = {}
    cov_values = {"ed": summary.empirical_cov_values / n}
    theory = {
        "ad": lambda g, d: asymptotics_ad(g, d, scale_n=n),
        "dag": lambda g, d: asymptotics_dag(g, d, scale_n=n),
        "ind": lambda g, d: asymptotics_ind(d, scale_n=n),
    }
    if any(m in methods for m in THEORY_METHODS):
        g_model = rotate_spectrum(
            model_spectral_density(spec, grid_size), truth.decomp.vectors
        )
        for method in THEORY_METHODS:
            if method not in methods:
                continue
            asym = theory[method](g_model, truth.decomp)
            se = standard_errors(asym)
            method_sd_loadings[method] = se.sd_loadings
            method_sd_r[method] = se.sd_r
            cov_values[method] = asym.B / n
    if want_de:
        method_sd_loadings["de"] = np.mean([rec[4] for rec in kept], axis=0)
        method_sd_r["de"] = np.mean([rec[5] for rec in kept], axis=0)
    if want_be:
        method_sd_loadings["be"] = np.mean([rec[6] for rec in kept], axis=0)
        method_sd_r["be"] = np.mean([rec[7] for rec in kept], axis=0)

    tables = {
        method: _metric_table(method, method_sd_loadings[method], method_sd_r[method], summary)
        for method in method_sd_loadings
    }
    return ComparisonResult(
        dgp_id=dgp_id,
        spec=spec,
        truth=truth,
        summary=summary,
        method_sd_loadings=method_sd_loadings,
        method_sd_r=method_sd_r,
        cov_values=cov_values,
        tables=tables,
    )


def run_comparison(
    dgp_ids: Sequence[int],
    n: int,
    N: int,
    R: int,
    seed: int,
    methods: Sequence[str] = THEORY_METHODS + ESTIMATION_METHODS,
    bandwidth: Optional[int] = None,
    block_size: Optional[int] = None,
    grid_size: int = 4096,
    workers: int = 1,
    out_dir=None,
) -> dict:
    """Full method comparison for each requested benchmark model.

    Returns a dict keyed by model id. When ``out_dir`` is given, metric
    tables (CSV + JSON) and plot-data CSVs are written there as well.
    """
    unknown = [m for m in methods if m not in THEORY_METHODS + ESTIMATION_METHODS]
    if unknown:
        raise ValueError(f"unknown methods: {unknown}")
    results = {}
    for dgp_id in dgp_ids:
        spec = fixture(int(dgp_id))
        results[int(dgp_id)] = _compare_one(
            int(dgp_id), spec, int(n), int(N), int(R), int(seed),
            tuple(methods), bandwidth, block_size, int(grid_size), workers,
        )
    if out_dir is not None:
        write_comparison_outputs(results, out_dir)
    return results


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def write_comparison_outputs(results: dict, out_dir) -> None:
    """Write metric tables and plot data for each compared model."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for dgp_id, res in sorted(results.items()):
        tag = f"dgp{dgp_id}"
        payload = {
            "dgp_id": dgp_id,
            "replicates": res.summary.replicates,
            "n": res.summary.scale_n,
            "empirical_sd_loadings": res.summary.empirical_sd_loadings.tolist(),
            "empirical_sd_r": res.summary.empirical_sd_r.tolist(),
            "methods": {
                method: {
                    "delta_r": table.delta_r.tolist(),
                    "delta_star": table.delta_star.tolist(),
                    "delta_tilde": table.delta_tilde.tolist(),
                }
                for method, table in res.tables.items()
            },
        }
        (out / f"metrics_{tag}.json").write_text(json.dumps(payload, indent=2))

        _write_csv(
            out / f"delta_r_{tag}.csv",
            ["method", "component", "value"],
            [
                (method, k + 1, table.delta_r[k])
                for method, table in sorted(res.tables.items())
                for k in range(table.delta_r.size)
            ],
        )
        _write_csv(
            out / f"delta_star_{tag}.csv",
            ["method", "component", "element", "value"],
            [
                (method, k + 1, kp + 1, table.delta_star[k, kp])
                for method, table in sorted(res.tables.items())
                for k in range(table.delta_star.shape[0])
                for kp in range(table.delta_star.shape[1])
            ],
        )
        _write_csv(
            out / f"delta_tilde_{tag}.csv",
            ["method", "component", "value"],
            [
                (method, k + 1, table.delta_tilde[k])
                for method, table in sorted(res.tables.items())
                for k in range(table.delta_tilde.size)
            ],
        )
        _write_csv(
            out / f"plot_cov_values_{tag}.csv",
            ["series", "x", "y"],
            [
                (series, idx + 1, matrix.reshape(-1)[idx])
                for series, matrix in sorted(res.cov_values.items())
                for idx in range(matrix.size)
            ],
        )
        _write_csv(
            out / f"plot_delta_star_{tag}.csv",
            ["series", "x", "y"],
            [
                (method, idx + 1, table.delta_star.reshape(-1)[idx])
                for method, table in sorted(res.tables.items())
                for idx in range(table.delta_star.size)
            ],
        )
