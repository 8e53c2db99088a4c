"""Asymptotic covariances of eigenvalues, loadings, and variance proportions.

Three dependence assumptions are supported, all operating on the spectrum of
the principal-component series g(w) (the input spectrum rotated into the
eigenbasis) and the eigenstructure itself:

* ``ad``  - full temporal and cross-sectional dependence: every covariance is
  a frequency integral over products of entries of g(w).
* ``dag`` - the principal-component series are treated as independently
  evolving univariate series, so only the diagonal of g(w) enters.
* ``ind`` - observations are treated as independent vectors; everything
  collapses to closed forms in the eigenvalues.

Each engine accepts either a model-implied or an estimated spectrum, so the
same code produces theoretical curves and plug-in estimates. The plug-in
route (:func:`direct_estimate`) rotates a Daniell-smoothed periodogram into
the sample eigenbasis and applies the chosen engine with sample eigenvalues.

Eigenvalue ties are refused: the loading covariances divide by eigenvalue
gaps, so near-degenerate inputs would return garbage rather than statistics.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .eigen import (
    DEGENERACY_RTOL,
    DegenerateEigenvaluesError,
    EigenDecomposition,
    eigendecompose,
)
from .series import MultivariateSeries, sample_covariance
from .spectral import (
    SpectralDensityEstimate,
    daniell_smooth,
    default_bandwidth,
    integrate_over_frequency,
    raw_periodogram,
    rotate_spectrum,
)

__all__ = [
    "ASSUMPTIONS",
    "EigenAsymptotics",
    "StandardErrors",
    "cov_u_gaussian",
    "asymptotics_ad",
    "asymptotics_dag",
    "asymptotics_ind",
    "direct_estimate",
    "standard_errors",
]

ASSUMPTIONS = ("ad", "dag", "ind")

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class EigenAsymptotics:
    """Covariance bundle for scaled estimation errors at sample size n.

    ``B`` is the p x p covariance of the scaled eigenvalue errors, ``sigma``
    stacks one p x p loading covariance per component, and ``eta_sq`` holds
    the variance of each scaled proportion of variation (exactly 0 for the
    last component, whose proportion is identically 1).
    """

    assumption: str
    B: np.ndarray
    sigma: np.ndarray
    eta_sq: np.ndarray
    scale_n: Optional[int] = None

    def __post_init__(self):
        if self.assumption not in ASSUMPTIONS:
            raise ValueError(f"assumption must be one of {ASSUMPTIONS}")
        b = np.array(self.B, dtype=float)
        sigma = np.array(self.sigma, dtype=float)
        eta_sq = np.array(self.eta_sq, dtype=float)
        p = b.shape[0]
        if b.shape != (p, p) or sigma.shape != (p, p, p) or eta_sq.shape != (p,):
            raise ValueError("inconsistent shapes in asymptotic covariance bundle")
        scale = max(1.0, float(np.max(np.abs(b))))
        if np.max(np.abs(b - b.T)) > 1e-10 * scale:
            raise ValueError("B must be symmetric")
        if np.min(np.diag(b)) < -1e-10 * scale:
            raise ValueError("B must have nonnegative diagonal")
        if eta_sq[-1] != 0.0:
            raise ValueError("the last proportion of variation has zero variance")
        if np.min(eta_sq) < -1e-12 * scale:
            raise ValueError("eta_sq must be nonnegative")
        for arr in (b, sigma, eta_sq):
            arr.flags.writeable = False
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "eta_sq", eta_sq)

    @property
    def p(self) -> int:
        return self.B.shape[0]

    def with_scale(self, n: int) -> "EigenAsymptotics":
        return replace(self, scale_n=int(n))


@dataclass(frozen=True)
class StandardErrors:
    """Per-sample standard errors derived from an asymptotic bundle."""

    sd_values: np.ndarray
    sd_loadings: np.ndarray  # [k, k'] = sd of element k' of component k
    sd_r: np.ndarray


def _check_decomposition(decomp: EigenDecomposition) -> None:
    if np.any(decomp.values <= 0):
        raise ValueError(
            "asymptotic covariances require strictly positive eigenvalues, "
            f"got minimum {decomp.values.min():.3e}"
        )
    gaps = decomp.degenerate_gaps()
    if gaps:
        k = gaps[0]
        gap = decomp.values[k] - decomp.values[k + 1]
        raise DegenerateEigenvaluesError(
            f"eigenvalues {k} and {k + 1} are nearly tied "
            f"(gap {gap:.3e} <= {DEGENERACY_RTOL:.0e} * trace "
            f"{abs(decomp.source_trace):.3e}); loading covariances are undefined"
        )


def _betas(values: np.ndarray) -> np.ndarray:
    """Sensitivities of each proportion of variation to each eigenvalue.

    Entry [i, k] applies to component k's proportion: (1(i <= k) - gamma_k)
    divided by the eigenvalue total.
    """
    total = values.sum()
    gamma = np.cumsum(values) / total
    p = values.size
    indicator = (np.arange(p)[:, None] <= np.arange(p)[None, :]).astype(float)
    return (indicator - gamma[None, :]) / total


def _eta_sq_from_b(b: np.ndarray, values: np.ndarray) -> np.ndarray:
    beta = _betas(values)
    eta_sq = np.einsum("ik,ij,jk->k", beta, b, beta)
    eta_sq = np.maximum(eta_sq, 0.0)
    eta_sq[-1] = 0.0
    return eta_sq


def _sigma_from_weights(weights: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Stack of loading covariances from per-component weight matrices.

    ``weights[k]`` holds the covariance of the scaled eigenbasis coordinates
    divided by the gap products; row/column k must already be zero. The
    loading covariance is the congruence transform back to original
    coordinates, which leaves component k in its own null space.
    """
    sigma = np.einsum("ia,kab,jb->kij", vectors, weights, vectors, optimize=True)
    return (sigma + np.swapaxes(sigma, 1, 2)) / 2.0


def cov_u_gaussian(g: SpectralDensityEstimate, i: int, j: int, k: int, l: int) -> float:
    """Asymptotic covariance of scaled eigenbasis covariance errors (zero
    fourth-cumulant case): 2*pi * integral of g_ik conj(g_jl) + g_il conj(g_jk).

    Indices are 0-based. The quadrature's imaginary residue is discarded.
    """
    mats = g.matrices
    integrand = mats[:, i, k] * np.conj(mats[:, j, l]) + mats[:, i, l] * np.conj(
        mats[:, j, k]
    )
    return float((_TWO_PI * integrate_over_frequency(integrand, g.frequencies)).real)


def asymptotics_ad(
    g: SpectralDensityEstimate,
    decomp: EigenDecomposition,
    scale_n: Optional[int] = None,
) -> EigenAsymptotics:
    """Full-dependence covariances from the rotated spectrum g(w).

    Eigenvalue covariances integrate |g_ij|^2; loading covariances integrate
    g_ij conj(g_kk) + g_ik conj(g_kj) and divide by both eigenvalue gaps.
    """
    _check_decomposition(decomp)
    values = decomp.values
    p = decomp.p
    if g.p != p:
        raise ValueError("spectrum dimension does not match decomposition")
    freqs = g.frequencies
    mats = g.matrices

    b = _TWO_PI * 2.0 * integrate_over_frequency(np.abs(mats) ** 2, freqs)
    b = (b + b.T) / 2.0

    diag = np.einsum("wkk->wk", mats)
    cross = np.einsum("wij,wk->wijk", mats, np.conj(diag))
    chain = np.einsum("wik,wkj->wijk", mats, np.conj(mats))
    cov_load = (_TWO_PI * integrate_over_frequency(cross + chain, freqs)).real

    gaps = values[:, None] - values[None, :]  # gaps[k, i] = lambda_k - lambda_i
    weights = np.zeros((p, p, p))
    for k in range(p):
        mask = np.ones(p, dtype=bool)
        mask[k] = False
        denom = np.outer(gaps[k], gaps[k])
        w = np.zeros((p, p))
        w[np.ix_(mask, mask)] = cov_load[np.ix_(mask, mask)][:, :, k] / denom[
            np.ix_(mask, mask)
        ]
        weights[k] = (w + w.T) / 2.0
    sigma = _sigma_from_weights(weights, decomp.vectors)

    return EigenAsymptotics("ad", b, sigma, _eta_sq_from_b(b, values), scale_n)


def asymptotics_dag(
    g: SpectralDensityEstimate,
    decomp: EigenDecomposition,
    scale_n: Optional[int] = None,
) -> EigenAsymptotics:
    """Diagonal-spectrum approximation: only the auto-spectra of the rotated
    series enter, making eigenvalue errors uncorrelated by construction."""
    _check_decomposition(decomp)
    values = decomp.values
    p = decomp.p
    if g.p != p:
        raise ValueError("spectrum dimension does not match decomposition")
    freqs = g.frequencies
    diag = np.einsum("wkk->wk", g.matrices).real

    b_diag = _TWO_PI * 2.0 * integrate_over_frequency(diag**2, freqs)
    b = np.diag(b_diag)

    pair = _TWO_PI * integrate_over_frequency(
        np.einsum("wk,wi->wki", diag, diag), freqs
    )
    gaps = values[:, None] - values[None, :]
    weights = np.zeros((p, p, p))
    for k in range(p):
        w = np.zeros(p)
        mask = np.ones(p, dtype=bool)
        mask[k] = False
        w[mask] = pair[k, mask] / gaps[k, mask] ** 2
        weights[k] = np.diag(w)
    sigma = _sigma_from_weights(weights, decomp.vectors)

    beta = _betas(values)
    eta_sq = np.einsum("k,ki->i", b_diag, beta**2)
    eta_sq[-1] = 0.0

    return EigenAsymptotics("dag", b, sigma, eta_sq, scale_n)


def asymptotics_ind(
    decomp: EigenDecomposition, scale_n: Optional[int] = None
) -> EigenAsymptotics:
    """Independent-observations closed forms; no spectrum required."""
    _check_decomposition(decomp)
    values = decomp.values
    p = decomp.p

    b = np.diag(2.0 * values**2)

    gaps = values[:, None] - values[None, :]
    weights = np.zeros((p, p, p))
    for k in range(p):
        w = np.zeros(p)
        mask = np.ones(p, dtype=bool)
        mask[k] = False
        w[mask] = values[k] * values[mask] / gaps[k, mask] ** 2
        weights[k] = np.diag(w)
    sigma = _sigma_from_weights(weights, decomp.vectors)

    beta = _betas(values)
    eta_sq = np.einsum("k,ki->i", 2.0 * values**2, beta**2)
    eta_sq[-1] = 0.0

    return EigenAsymptotics("ind", b, sigma, eta_sq, scale_n)


def direct_estimate(
    series: MultivariateSeries,
    assumption: str,
    bandwidth: Optional[int] = None,
) -> EigenAsymptotics:
    """Plug-in covariance estimate from one observed series.

    Pipeline: sample covariance -> eigendecomposition -> raw periodogram ->
    Daniell smoothing -> rotation into the sample eigenbasis -> the chosen
    assumption engine with sample eigenvalues. Under ``ind`` the spectrum is
    not needed and the closed forms use the sample eigenvalues directly.
    """
    if assumption not in ASSUMPTIONS:
        raise ValueError(f"assumption must be one of {ASSUMPTIONS}, got {assumption!r}")
    decomp = eigendecompose(sample_covariance(series))
    if assumption == "ind":
        return asymptotics_ind(decomp, scale_n=series.n)
    m = default_bandwidth(series.n) if bandwidth is None else int(bandwidth)
    smoothed = daniell_smooth(raw_periodogram(series), m)
    rotated = rotate_spectrum(smoothed, decomp.vectors)
    engine = asymptotics_ad if assumption == "ad" else asymptotics_dag
    return engine(rotated, decomp, scale_n=series.n)


def standard_errors(asym: EigenAsymptotics) -> StandardErrors:
    """Convert an asymptotic bundle into per-sample standard errors."""
    if asym.scale_n is None:
        raise ValueError("scale_n is not set; use with_scale(n) first")
    n = float(asym.scale_n)
    sd_values = np.sqrt(np.maximum(np.diag(asym.B), 0.0) / n)
    load_var = np.diagonal(asym.sigma, axis1=1, axis2=2)
    sd_loadings = np.sqrt(np.maximum(load_var, 0.0) / n)
    sd_r = np.sqrt(np.maximum(asym.eta_sq, 0.0) / n)
    return StandardErrors(sd_values, sd_loadings, sd_r)
