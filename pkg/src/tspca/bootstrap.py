"""Moving block bootstrap for loading and variance-proportion standard errors.

Resampling concatenates uniformly chosen blocks of consecutive rows, so
within-block temporal dependence survives into each replicate. This makes
the resulting standard errors valid for general stationary processes — in
particular heavy-tailed ones, where plug-in spectral estimators miss the
fourth-moment contribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import DOMAIN_MBB, ceil_cube_root, stream_rng
from .eigen import (
    ConvergenceError,
    DegenerateEigenvaluesError,
    EigenDecomposition,
    align_signs,
    eigendecompose,
)
from .series import MultivariateSeries, sample_covariance

__all__ = ["MBBConfig", "BootstrapResult", "default_block_size", "mbb_resample", "bootstrap_sd"]

_MAX_FAILURE_RATE = 0.01


@dataclass(frozen=True)
class MBBConfig:
    """Block size, replicate count, and seed for one bootstrap run."""

    block_size: int
    replicates: int
    seed: int

    def __post_init__(self):
        if self.block_size < 1:
            raise ValueError("block_size must be positive")
        if self.replicates < 2:
            raise ValueError("at least 2 bootstrap replicates are required")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class BootstrapResult:
    """Entrywise standard deviations across aligned bootstrap replicates."""

    sd_values: np.ndarray
    sd_loadings: np.ndarray  # [k, k'] = sd of element k' of component k
    sd_r: np.ndarray
    replicate_count: int
    point: EigenDecomposition


def default_block_size(n: int) -> int:
    """Block length rule ceil(n^(1/3)); callers may override via MBBConfig."""
    if n < 8:
        raise ValueError("block size rule requires n >= 8")
    return ceil_cube_root(int(n))


def mbb_resample(
    series: MultivariateSeries, config: MBBConfig, replicate_index: int
) -> MultivariateSeries:
    """One deterministic block resample of the series.

    ceil(n / block_size) block start rows are drawn uniformly with
    replacement from the fully contained positions, the blocks are
    concatenated, and the result is truncated back to n rows. The draw is
    keyed by (seed, replicate_index), so replicates are independent and any
    one of them is reproducible in isolation.
    """
    n = series.n
    rho = config.block_size
    if rho > n:
        raise ValueError(f"block_size {rho} exceeds series length {n}")
    tau = math.ceil(n / rho)
    rng = stream_rng(config.seed, replicate_index, DOMAIN_MBB)
    starts = rng.integers(0, n - rho + 1, size=tau)
    indices = (starts[:, None] + np.arange(rho)[None, :]).reshape(-1)[:n]
    return MultivariateSeries(series.data[indices])


def bootstrap_sd(
    series: MultivariateSeries, config: MBBConfig, align: bool = True
) -> BootstrapResult:
    """Bootstrap standard deviations of eigenvalues, loadings, and proportions.

    Each replicate is resampled, decomposed, and sign-aligned against the
    full-sample decomposition before its loadings enter the spread; without
    that alignment the arbitrary sign of each eigenvector would inflate the
    deviations (``align=False`` exists only so tests can demonstrate this).
    Replicates whose eigenstructure fails to resolve are skipped; more than
    1% of them failing aborts the run.
    """
    point = eigendecompose(sample_covariance(series))
    gaps = point.degenerate_gaps()
    if gaps:
        k = gaps[0]
        raise DegenerateEigenvaluesError(
            f"sample eigenvalues {k} and {k + 1} are nearly tied "
            f"(values {point.values[k]:.6g} and {point.values[k + 1]:.6g}); "
            "bootstrap loadings are not identifiable"
        )
    if point.values.min() <= 0:
        raise DegenerateEigenvaluesError(
            f"sample covariance is not positive definite "
            f"(smallest eigenvalue {point.values.min():.6g})"
        )
    n, p = series.n, series.p
    r_total = config.replicates
    values = np.empty((r_total, p))
    loadings = np.empty((r_total, p, p))
    props = np.empty((r_total, p))
    kept = 0
    failures: list[tuple[int, str]] = []
    for rep in range(r_total):
        resampled = mbb_resample(series, config, rep)
        try:
            dec = eigendecompose(sample_covariance(resampled))
            if np.any(dec.values <= 0):
                raise DegenerateEigenvaluesError(
                    "nonpositive eigenvalue in bootstrap replicate"
                )
        except (ConvergenceError, DegenerateEigenvaluesError) as exc:
            failures.append((rep, str(exc)))
            continue
        if align:
            dec = align_signs(dec, point.vectors)
        values[kept] = dec.values
        loadings[kept] = dec.vectors.T  # row k = component k
        partial = np.cumsum(dec.values)
        props[kept] = partial / partial[-1]
        kept += 1
    if failures and len(failures) / r_total > _MAX_FAILURE_RATE:
        first = failures[0]
        raise RuntimeError(
            f"{len(failures)} of {r_total} bootstrap replicates failed "
            f"(first failure at replicate {first[0]}: {first[1]})"
        )
    # Center on the first replicate before the spread computation: a no-op in
    # exact arithmetic, but it keeps identical replicates at spread exactly 0.
    sd_values = (values[:kept] - values[0]).std(axis=0, ddof=1)
    sd_loadings = (loadings[:kept] - loadings[0]).std(axis=0, ddof=1)
    sd_r = (props[:kept] - props[0]).std(axis=0, ddof=1)
    return BootstrapResult(sd_values, sd_loadings, sd_r, kept, point)
