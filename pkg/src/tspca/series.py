"""Series containers and second-moment estimators (mean, covariance, autocovariance)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MultivariateSeries",
    "AutocovarianceSequence",
    "sample_mean",
    "sample_covariance",
    "sample_autocovariance",
    "autocovariance_sequence",
]


def _frozen_array(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class MultivariateSeries:
    """An n x p panel of observations, rows ordered in time.

    Requires n >= 2 rows, p >= 1 columns and finite entries throughout.
    The stored array is read-only; instances are safe to share across threads.
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError(f"series data must be 2-dimensional, got ndim={data.ndim}")
        n, p = data.shape
        if n < 2:
            raise ValueError(f"series needs at least 2 time points, got n={n}")
        if p < 1:
            raise ValueError("series needs at least 1 variable")
        if not np.all(np.isfinite(data)):
            raise ValueError("series contains non-finite entries (NaN or Inf)")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class AutocovarianceSequence:
    """Lagged autocovariance matrices of one series, indexed by nonnegative lag."""

    lags: tuple
    matrices: np.ndarray  # (len(lags), p, p)
    series_length: int

    def __post_init__(self):
        lags = tuple(int(s) for s in self.lags)
        matrices = _frozen_array(self.matrices)
        if matrices.ndim != 3 or matrices.shape[1] != matrices.shape[2]:
            raise ValueError("matrices must be a stack of square matrices")
        if len(lags) != matrices.shape[0]:
            raise ValueError("one matrix per lag required")
        if any(s < 0 for s in lags):
            raise ValueError("lags must be nonnegative")
        if any(s > self.series_length - 1 for s in lags):
            raise ValueError(
                f"lags beyond n-1={self.series_length - 1} are not representable"
            )
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "matrices", matrices)

    def matrix(self, lag: int) -> np.ndarray:
        return self.matrices[self.lags.index(lag)]


def sample_mean(series: MultivariateSeries) -> np.ndarray:
    """Componentwise arithmetic mean over time."""
    return series.data.mean(axis=0)


def sample_autocovariance(series: MultivariateSeries, s: int) -> np.ndarray:
    """Lag-s autocovariance (1/n) sum_{t=1}^{n-s} (X(t+s)-mean)(X(t)-mean)^T.

    The sum is truncated at t = n-s and the divisor stays n (biased estimator),
    so the lag-0 matrix is positive semi-definite by construction.
    """
    s = int(s)
    n = series.n
    if not 0 <= s <= n - 1:
        raise ValueError(f"lag must satisfy 0 <= s <= n-1={n - 1}, got {s}")
    centered = series.data - series.data.mean(axis=0)
    gamma = centered[s:].T @ centered[: n - s] / n
    if s == 0:
        gamma = (gamma + gamma.T) / 2.0
    return gamma


def sample_covariance(series: MultivariateSeries) -> np.ndarray:
    """Sample covariance with divisor n; identical to the lag-0 autocovariance."""
    return sample_autocovariance(series, 0)


def autocovariance_sequence(series: MultivariateSeries, max_lag: int) -> AutocovarianceSequence:
    """All autocovariances for lags 0..max_lag as one stack."""
    max_lag = int(max_lag)
    if not 0 <= max_lag <= series.n - 1:
        raise ValueError(f"max_lag must be in [0, n-1], got {max_lag}")
    mats = np.stack([sample_autocovariance(series, s) for s in range(max_lag + 1)])
    return AutocovarianceSequence(tuple(range(max_lag + 1)), mats, series.n)
