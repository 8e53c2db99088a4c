"""Spectral density estimation and frequency-domain quadrature.

Conventions used throughout:

* Grids are radian frequencies. Estimates from data live on the Fourier grid
  ``2*pi*j/n`` for ``j = -floor(n/2) .. floor(n/2)``; model-implied spectra
  live on a uniform closed grid over ``[-pi, pi]``.
* Every per-frequency matrix is Hermitian. Each transform re-symmetrizes
  with ``(H + H*) / 2`` so roundoff cannot accumulate into the invariant.
* The raw periodogram is the Fourier transform of the biased autocovariance
  sequence; at full lag depth it is computed by FFT, which is algebraically
  the same sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import ceil_cube_root
from .dgp import DGPSpec
from .series import MultivariateSeries, autocovariance_sequence

__all__ = [
    "SpectralDensityEstimate",
    "TransferEvaluation",
    "fourier_grid",
    "raw_periodogram",
    "daniell_smooth",
    "rotate_spectrum",
    "model_spectral_density",
    "transfer_function",
    "integrate_over_frequency",
    "default_bandwidth",
]

_TWO_PI = 2.0 * math.pi
_HERMITIAN_TOL = 1e-8
_DIAG_NEG_TOL = 1e-10


def default_bandwidth(n: int) -> int:
    """Smoothing half-width used when none is requested: ceil(n^(1/3))."""
    return ceil_cube_root(int(n))


def _hermitianize(matrices: np.ndarray) -> np.ndarray:
    return (matrices + np.conj(np.swapaxes(matrices, -1, -2))) / 2.0


@dataclass(frozen=True)
class SpectralDensityEstimate:
    """Per-frequency Hermitian matrices on a symmetric frequency grid."""

    frequencies: np.ndarray
    matrices: np.ndarray
    kind: str

    def __post_init__(self):
        freqs = np.array(self.frequencies, dtype=float)
        mats = np.array(self.matrices, dtype=complex)
        if self.kind not in ("raw", "smoothed", "rotated", "model"):
            raise ValueError(f"unknown spectral estimate kind {self.kind!r}")
        if freqs.ndim != 1 or mats.ndim != 3 or mats.shape[0] != freqs.size:
            raise ValueError("need one square matrix per frequency")
        if mats.shape[1] != mats.shape[2]:
            raise ValueError("per-frequency matrices must be square")
        if freqs.size < 2 or np.any(np.diff(freqs) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        scale = max(1.0, float(np.max(np.abs(mats))))
        herm_gap = np.max(np.abs(mats - np.conj(np.swapaxes(mats, 1, 2))))
        if herm_gap > _HERMITIAN_TOL * scale:
            raise ValueError(f"matrices not Hermitian: max deviation {herm_gap:.3e}")
        if not np.allclose(freqs, -freqs[::-1], atol=1e-12):
            raise ValueError("frequency grid must be symmetric about zero")
        sym_gap = np.max(np.abs(mats[::-1] - np.conj(mats)))
        if sym_gap > _HERMITIAN_TOL * scale:
            raise ValueError(
                f"conjugate symmetry across frequencies violated: {sym_gap:.3e}"
            )
        diag = np.diagonal(mats, axis1=1, axis2=2)
        if np.max(np.abs(diag.imag)) > _HERMITIAN_TOL * scale:
            raise ValueError("diagonal entries must be real")
        if diag.real.min() < -_DIAG_NEG_TOL * scale:
            raise ValueError("auto-spectra must be nonnegative")
        freqs.flags.writeable = False
        mats.flags.writeable = False
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "matrices", mats)

    @property
    def p(self) -> int:
        return self.matrices.shape[1]

    @property
    def grid_size(self) -> int:
        return self.frequencies.size


@dataclass(frozen=True)
class TransferEvaluation:
    """Frequency response of the generating filter at one frequency."""

    frequency: float
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        if not np.all(np.isfinite(matrix.view(float))):
            raise ValueError("transfer matrix must be finite")
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "frequency", float(self.frequency))


def fourier_grid(n: int) -> np.ndarray:
    """Frequencies 2*pi*j/n for j = -floor(n/2) .. floor(n/2)."""
    half = n // 2
    return _TWO_PI * np.arange(-half, half + 1) / n


def _ring_to_grid_indices(n: int) -> np.ndarray:
    half = n // 2
    return np.mod(np.arange(-half, half + 1), n)


def raw_periodogram(series: MultivariateSeries, max_lag: int | None = None) -> SpectralDensityEstimate:
    """Raw periodogram on the Fourier grid.

    ``max_lag`` truncates the autocovariance sum (testing aid); the default
    n-1 keeps every lag, in which case the FFT of the centered data gives the
    identical result in O(n log n).
    """
    n = series.n
    if max_lag is None:
        max_lag = n - 1
    max_lag = int(max_lag)
    if not 1 <= max_lag <= n - 1:
        raise ValueError(f"max_lag must be in [1, n-1], got {max_lag}")
    freqs = fourier_grid(n)
    if max_lag == n - 1:
        centered = series.data - series.data.mean(axis=0)
        transform = np.fft.fft(centered, axis=0)
        ring = np.einsum("wi,wj->wij", transform, np.conj(transform)) / (_TWO_PI * n)
        mats = ring[_ring_to_grid_indices(n)]
    else:
        acov = autocovariance_sequence(series, max_lag).matrices
        phases = np.exp(-1j * np.outer(freqs, np.arange(1, max_lag + 1)))
        positive = np.einsum("ws,sij->wij", phases, acov[1:])
        mats = (acov[0] + positive + np.conj(np.swapaxes(positive, 1, 2))) / _TWO_PI
    return SpectralDensityEstimate(freqs, _hermitianize(mats), "raw")


def _split_ring(est: SpectralDensityEstimate):
    """Distinct frequency ordinates of an estimate, dropping a duplicated +pi."""
    freqs = est.frequencies
    step = freqs[1] - freqs[0]
    span = freqs[-1] - freqs[0]
    closed = abs(span - _TWO_PI) <= 1e-9
    if closed:
        return est.matrices[:-1], freqs[:-1], True
    if abs(span + step - _TWO_PI) <= 1e-9:
        return est.matrices, freqs, False
    raise ValueError("estimate grid does not cover one full period")


def daniell_smooth(raw: SpectralDensityEstimate, M: int) -> SpectralDensityEstimate:
    """Average each frequency with its 2M+1 neighbors, wrapping at +-pi."""
    ring, _, closed = _split_ring(raw)
    n = ring.shape[0]
    M = int(M)
    if not 1 <= M <= n // 4:
        raise ValueError(f"bandwidth must be in [1, n//4]={n // 4}, got {M}")
    smoothed_ring = _smooth_ring(ring, M)
    if closed:
        mats = np.concatenate([smoothed_ring, smoothed_ring[:1]], axis=0)
    else:
        mats = smoothed_ring
    return SpectralDensityEstimate(raw.frequencies, _hermitianize(mats), "smoothed")


def _smooth_ring(ring: np.ndarray, M: int) -> np.ndarray:
    """Circular moving average with 2M+1 equal weights along axis 0."""
    n = ring.shape[0]
    if 2 * M + 1 >= n:
        mean = ring.mean(axis=0)
        return np.broadcast_to(mean, ring.shape).copy()
    out = ring.copy()
    for m in range(1, M + 1):
        out += np.roll(ring, m, axis=0)
        out += np.roll(ring, -m, axis=0)
    return out / (2 * M + 1)


def rotate_spectrum(f: SpectralDensityEstimate, basis: np.ndarray) -> SpectralDensityEstimate:
    """Congruence transform basis^T f(w) basis at every frequency."""
    basis = np.asarray(basis, dtype=float)
    p = f.p
    if basis.shape != (p, p):
        raise ValueError(f"basis shape {basis.shape} does not match spectrum dimension {p}")
    gap = np.max(np.abs(basis.T @ basis - np.eye(p)))
    if gap > 1e-6:
        raise ValueError(f"basis is not orthonormal: max deviation {gap:.3e}")
    rotated = np.einsum("pi,wpq,qj->wij", basis, f.matrices, basis, optimize=True)
    return SpectralDensityEstimate(f.frequencies, _hermitianize(rotated), "rotated")


def _transfer_grid(model: DGPSpec, omegas: np.ndarray) -> np.ndarray:
    """Filter frequency response h(w) on a grid: VMA polynomial or VAR inverse."""
    p = model.p
    eye = np.eye(p)
    poly = np.broadcast_to(eye, (omegas.size, p, p)).astype(complex).copy()
    for j, coeff in enumerate(model.coefficients, start=1):
        poly += np.exp(-1j * j * omegas)[:, None, None] * coeff
    if model.kind == "vma":
        return poly
    # VAR: h = (I - sum_j F_j e^{-ij w})^{-1}; poly built above is I + sum,
    # so rebuild with the sign flipped.
    ar = np.broadcast_to(eye, (omegas.size, p, p)).astype(complex).copy()
    for j, coeff in enumerate(model.coefficients, start=1):
        ar -= np.exp(-1j * j * omegas)[:, None, None] * coeff
    return np.linalg.inv(ar)


def transfer_function(model: DGPSpec, omega: float) -> TransferEvaluation:
    """h(w) for one frequency."""
    matrix = _transfer_grid(model, np.array([float(omega)]))[0]
    return TransferEvaluation(float(omega), matrix)


def model_spectral_density(model: DGPSpec, grid_size: int = 4096) -> SpectralDensityEstimate:
    """Exact model-implied spectrum f(w) = h(w) K h(w)* / (2*pi) on [-pi, pi]."""
    grid_size = int(grid_size)
    if grid_size < 8:
        raise ValueError("grid_size must be at least 8")
    omegas = np.linspace(-math.pi, math.pi, grid_size)
    h = _transfer_grid(model, omegas)
    k = model.noise.true_covariance()
    mats = np.einsum("wpa,ab,wqb->wpq", h, k, np.conj(h), optimize=True) / _TWO_PI
    return SpectralDensityEstimate(omegas, _hermitianize(mats), "model")


def integrate_over_frequency(values: np.ndarray, frequencies: np.ndarray):
    """Trapezoidal integral over one period of a uniform frequency grid.

    Accepts either a closed grid (both endpoints of [-pi, pi] present; the
    endpoint values coincide by periodicity) or the odd-length Fourier grid
    whose end gaps wrap across +-pi, where the trapezoid rule reduces to the
    rectangle sum. Scalar-per-frequency input yields a scalar; matrix input
    integrates entrywise.
    """
    values = np.asarray(values)
    freqs = np.asarray(frequencies, dtype=float)
    if freqs.ndim != 1 or freqs.size < 2:
        raise ValueError("frequencies must be a vector with at least 2 points")
    if values.shape[0] != freqs.size:
        raise ValueError("values must carry one entry per frequency")
    steps = np.diff(freqs)
    step = steps[0]
    if not np.allclose(steps, step, rtol=1e-9, atol=1e-12):
        raise ValueError("frequency grid must be uniform")
    span = freqs[-1] - freqs[0]
    if abs(span - _TWO_PI) <= 1e-9 and abs(freqs[0] + math.pi) <= 1e-9:
        out = values.sum(axis=0) - (values[0] + values[-1]) / 2.0
        return out * step
    if abs(span + step - _TWO_PI) <= 1e-9 and abs(freqs[0] + math.pi - step / 2.0) <= 1e-9:
        return values.sum(axis=0) * step
    raise ValueError("frequency grid does not cover [-pi, pi]")
