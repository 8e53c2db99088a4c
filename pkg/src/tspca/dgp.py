"""Data-generating processes: VAR/VMA simulators, noise families, benchmark fixtures.

The eight numbered fixtures are five-dimensional processes used throughout
the experiment harness: a VAR(1), four Gaussian VMA models of orders 1-3,
and four variants of the order-1 moving average driven by contaminated,
skewed, and heavy-tailed noise.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._util import DOMAIN_CONTAMINATE, DOMAIN_SIMULATE, stream_rng
from .eigen import EigenDecomposition, eigendecompose
from .series import MultivariateSeries

__all__ = [
    "GaussianNoise",
    "ContaminatedNoise",
    "SkewNormalNoise",
    "StudentTNoise",
    "DGPSpec",
    "PopulationTruth",
    "fixture",
    "fixture_json",
    "fixture_checksum",
    "draw_noise",
    "simulate",
    "population_truth",
    "VAR_BURN_IN",
]

VAR_BURN_IN = 500
_LYAPUNOV_TOL = 1e-12


def _frozen(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.flags.writeable = False
    return out


def _check_psd(matrix: np.ndarray, name: str) -> None:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be square")
    if np.max(np.abs(matrix - matrix.T)) > 1e-10 * max(1.0, np.max(np.abs(matrix))):
        raise ValueError(f"{name} must be symmetric")
    eigvals = np.linalg.eigvalsh(matrix)
    if eigvals.min() < -1e-10 * max(1.0, eigvals.max()):
        raise ValueError(f"{name} must be positive semi-definite")


@dataclass(frozen=True)
class GaussianNoise:
    """Multivariate normal innovations."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = _frozen(self.mean)
        cov = _frozen(self.covariance)
        _check_psd(cov, "covariance")
        if mean.shape != (cov.shape[0],):
            raise ValueError("mean length must match covariance dimension")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def p(self) -> int:
        return self.mean.size

    def true_mean(self) -> np.ndarray:
        return self.mean

    def true_covariance(self) -> np.ndarray:
        return self.covariance

    def draw(self, count: int, rng: np.random.Generator) -> np.ndarray:
        root = np.linalg.cholesky(self.covariance + 1e-300 * np.eye(self.p))
        z = rng.standard_normal((count, self.p))
        return self.mean + z @ root.T


@dataclass(frozen=True)
class ContaminatedNoise:
    """Gaussian innovations with a fixed share of positions replaced by outliers.

    ``outlier_count`` fixes the number of contaminated draws; when None, 1%
    of the requested draw count is used. Half the outliers center on
    ``outlier_means[0]``, half on ``outlier_means[1]``; both reuse the base
    covariance.
    """

    base: GaussianNoise
    outlier_count: Optional[int]
    outlier_means: tuple

    def __post_init__(self):
        hi = _frozen(self.outlier_means[0])
        lo = _frozen(self.outlier_means[1])
        if hi.shape != (self.base.p,) or lo.shape != (self.base.p,):
            raise ValueError("outlier means must match the base dimension")
        if self.outlier_count is not None and self.outlier_count < 0:
            raise ValueError("outlier_count must be nonnegative")
        object.__setattr__(self, "outlier_means", (hi, lo))

    @property
    def p(self) -> int:
        return self.base.p

    def _rate(self) -> float:
        return 0.01

    def effective_count(self, count: int) -> int:
        if self.outlier_count is not None:
            return min(self.outlier_count, count)
        return int(round(self._rate() * count))

    def true_mean(self) -> np.ndarray:
        q = self._rate() if self.outlier_count is None else None
        # Population limit treats the contamination as an even two-sided mixture.
        rate = self._rate()
        hi, lo = self.outlier_means
        return (1 - rate) * self.base.mean + rate / 2 * (hi + lo)

    def true_covariance(self) -> np.ndarray:
        rate = self._rate()
        hi, lo = self.outlier_means
        base_mean = self.base.mean
        second = (
            (1 - rate) * (self.base.covariance + np.outer(base_mean, base_mean))
            + rate / 2 * (self.base.covariance + np.outer(hi, hi))
            + rate / 2 * (self.base.covariance + np.outer(lo, lo))
        )
        mean = self.true_mean()
        return second - np.outer(mean, mean)

    def draw(self, count: int, rng: np.random.Generator) -> np.ndarray:
        draws = self.base.draw(count, rng)
        n_out = self.effective_count(count)
        if n_out == 0:
            return draws
        positions = rng.choice(count, size=n_out, replace=False)
        n_hi = n_out // 2
        root = np.linalg.cholesky(self.base.covariance + 1e-300 * np.eye(self.p))
        z = rng.standard_normal((n_out, self.p)) @ root.T
        hi, lo = self.outlier_means
        draws[positions[:n_hi]] = hi + z[:n_hi]
        draws[positions[n_hi:]] = lo + z[n_hi:]
        return draws


@dataclass(frozen=True)
class SkewNormalNoise:
    """Multivariate skew-normal innovations via the hidden-truncation construction.

    A latent standard normal is drawn jointly with the base vector; reflecting
    the vector by the latent sign produces the skewed law. With
    ``recenter=True`` (default) the analytic mean shift is removed so the
    innovations have mean ``xi``.
    """

    xi: np.ndarray
    omega: np.ndarray
    alpha: np.ndarray
    recenter: bool = True

    def __post_init__(self):
        xi = _frozen(self.xi)
        omega = _frozen(self.omega)
        alpha = _frozen(self.alpha)
        _check_psd(omega, "omega")
        if xi.shape != (omega.shape[0],) or alpha.shape != (omega.shape[0],):
            raise ValueError("xi/alpha length must match omega dimension")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "alpha", alpha)

    @property
    def p(self) -> int:
        return self.xi.size

    def _shape(self):
        scale = np.sqrt(np.diag(self.omega))
        corr = self.omega / np.outer(scale, scale)
        delta = corr @ self.alpha / math.sqrt(1.0 + float(self.alpha @ corr @ self.alpha))
        return scale, corr, delta

    def true_mean(self) -> np.ndarray:
        if self.recenter:
            return self.xi
        scale, _, delta = self._shape()
        return self.xi + scale * delta * math.sqrt(2.0 / math.pi)

    def true_covariance(self) -> np.ndarray:
        scale, _, delta = self._shape()
        shift = scale * delta
        return self.omega - (2.0 / math.pi) * np.outer(shift, shift)

    def draw(self, count: int, rng: np.random.Generator) -> np.ndarray:
        scale, corr, delta = self._shape()
        joint = np.empty((self.p + 1, self.p + 1))
        joint[0, 0] = 1.0
        joint[0, 1:] = delta
        joint[1:, 0] = delta
        joint[1:, 1:] = corr
        root = np.linalg.cholesky(joint + 1e-12 * np.eye(self.p + 1))
        z = rng.standard_normal((count, self.p + 1)) @ root.T
        sign = np.where(z[:, 0] >= 0, 1.0, -1.0)
        reflected = sign[:, None] * z[:, 1:]
        out = self.xi + scale * reflected
        if self.recenter:
            out = out - scale * delta * math.sqrt(2.0 / math.pi)
        return out


@dataclass(frozen=True)
class StudentTNoise:
    """Multivariate Student-t innovations; dof > 2 keeps the covariance finite."""

    mu: np.ndarray
    sigma: np.ndarray
    dof: float

    def __post_init__(self):
        mu = _frozen(self.mu)
        sigma = _frozen(self.sigma)
        _check_psd(sigma, "sigma")
        if mu.shape != (sigma.shape[0],):
            raise ValueError("mu length must match sigma dimension")
        if self.dof <= 2:
            raise ValueError("dof must exceed 2 for a finite covariance")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "dof", float(self.dof))

    @property
    def p(self) -> int:
        return self.mu.size

    def true_mean(self) -> np.ndarray:
        return self.mu

    def true_covariance(self) -> np.ndarray:
        return self.sigma * (self.dof / (self.dof - 2.0))

    def draw(self, count: int, rng: np.random.Generator) -> np.ndarray:
        root = np.linalg.cholesky(self.sigma + 1e-300 * np.eye(self.p))
        z = rng.standard_normal((count, self.p)) @ root.T
        w = rng.chisquare(self.dof, size=count)
        return self.mu + z * np.sqrt(self.dof / w)[:, None]


def draw_noise(spec, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` innovation vectors from any noise spec, reproducibly."""
    rng = stream_rng(seed, 0, DOMAIN_CONTAMINATE)
    return spec.draw(int(count), rng)


@dataclass(frozen=True)
class DGPSpec:
    """A finite-order VAR or VMA model plus its innovation law.

    VAR specs must be stationary: the spectral radius of the companion matrix
    has to be below 1. VMA specs only need finite coefficients.
    """

    kind: str
    coefficients: tuple
    noise: object

    def __post_init__(self):
        if self.kind not in ("var", "vma"):
            raise ValueError(f"kind must be 'var' or 'vma', got {self.kind!r}")
        p = self.noise.p
        coeffs = tuple(_frozen(c) for c in self.coefficients)
        for c in coeffs:
            if c.shape != (p, p):
                raise ValueError("every coefficient matrix must be p x p")
            if not np.all(np.isfinite(c)):
                raise ValueError("coefficient matrices must be finite")
        object.__setattr__(self, "coefficients", coeffs)
        if self.kind == "var" and coeffs:
            radius = _companion_radius(coeffs)
            if radius >= 1.0:
                raise ValueError(
                    f"VAR spec is non-stationary: companion spectral radius {radius:.4f}"
                )

    @property
    def p(self) -> int:
        return self.noise.p

    @property
    def order(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True)
class PopulationTruth:
    """Model-implied covariance and its eigenstructure."""

    covariance: np.ndarray
    decomp: EigenDecomposition

    @property
    def degenerate(self) -> bool:
        return self.decomp.near_degenerate


def _companion_matrix(coeffs) -> np.ndarray:
    p = coeffs[0].shape[0]
    order = len(coeffs)
    comp = np.zeros((order * p, order * p))
    comp[:p] = np.hstack(coeffs)
    if order > 1:
        comp[p:, : (order - 1) * p] = np.eye((order - 1) * p)
    return comp


def _companion_radius(coeffs) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(_companion_matrix(coeffs)))))


# Coefficient fixtures, transcribed to two/three decimals exactly as used.

_DGP1_VAR1 = (
    (0.21, -0.49, 0.16, -0.14, -0.36),
    (-0.25, 0.074, 0.38, -0.14, 0.047),
    (-0.11, 0.26, 0.39, 0.091, 0.18),
    (-0.41, 0.37, 0.066, 0.37, 0.028),
    (0.46, -0.46, 0.094, 0.18, -0.41),
)

_VMA1_SHARED = (
    (-0.46, 0.17, 0.23, 0.40, -0.22),
    (0.15, -0.59, 0.05, -0.26, -0.24),
    (0.13, -0.32, -0.26, -0.28, -0.41),
    (0.15, 0.20, 0.51, -0.38, -0.55),
    (0.43, 0.02, -0.25, -0.32, -0.34),
)

_DGP3_G1 = (
    (0.62, -0.73, -0.02, 0.52, -0.52),
    (0.71, -0.11, -0.19, 0.43, -0.75),
    (0.09, -0.56, 0.79, -0.51, -0.08),
    (0.14, 0.90, 0.07, -0.53, -0.27),
    (-0.23, -0.01, 0.59, 0.81, 0.10),
)

_DGP3_G2 = (
    (0.26, -0.16, -0.16, -0.38, 0.27),
    (0.34, -0.27, -0.33, -0.44, 0.06),
    (-0.22, -0.18, 0.62, -0.08, 0.19),
    (0.26, -0.30, 0.15, -0.24, 0.02),
    (0.11, 0.21, 0.21, -0.14, 0.45),
)

_DGP4_G1 = (
    (0.94, -0.35, -0.49, 0.17, -0.18),
    (0.58, 0.35, -0.43, -0.29, -0.36),
    (0.42, -0.16, 1.07, -0.28, 0.39),
    (0.59, 0.41, -0.38, 0.27, -0.03),
    (0.18, 0.66, -0.28, 0.42, 0.91),
)

_DGP4_G2 = (
    (-0.14, -0.04, -0.33, 0.40, 0.02),
    (0.27, -0.32, -0.27, 0.02, -0.16),
    (0.45, -0.18, 0.03, -0.31, 0.16),
    (0.41, 0.39, -0.33, -0.36, 0.10),
    (0.31, 0.47, -0.08, 0.14, -0.26),
)

_DGP4_G3 = (
    (-0.16, 0.24, 0.10, 0.22, 0.17),
    (-0.22, 0.17, 0.10, 0.26, 0.14),
    (0.06, -0.03, -0.11, -0.05, -0.17),
    (-0.11, 0.02, 0.01, 0.19, 0.11),
    (0.14, -0.11, 0.16, -0.21, -0.24),
)

_P = 5


def _base_gaussian() -> GaussianNoise:
    return GaussianNoise(np.zeros(_P), 10.0 * np.eye(_P))


def _fixture_table():
    return {
        1: ("var", (_DGP1_VAR1,), _base_gaussian()),
        2: ("vma", (_VMA1_SHARED,), _base_gaussian()),
        3: ("vma", (_DGP3_G1, _DGP3_G2), _base_gaussian()),
        4: ("vma", (_DGP4_G1, _DGP4_G2, _DGP4_G3), _base_gaussian()),
        5: (
            "vma",
            (_VMA1_SHARED,),
            ContaminatedNoise(
                _base_gaussian(),
                None,
                (10.0 * np.ones(_P), -10.0 * np.ones(_P)),
            ),
        ),
        6: (
            "vma",
            (_VMA1_SHARED,),
            SkewNormalNoise(
                np.zeros(_P), 10.0 * np.eye(_P), np.array([1.0, 2.0, 3.0, 4.0, 5.0])
            ),
        ),
        7: ("vma", (_VMA1_SHARED,), StudentTNoise(np.zeros(_P), 10.0 * np.eye(_P), 5.0)),
        8: ("vma", (_VMA1_SHARED,), StudentTNoise(np.zeros(_P), 10.0 * np.eye(_P), 8.0)),
    }


def fixture(dgp_id: int) -> DGPSpec:
    """Benchmark model number 1..8."""
    table = _fixture_table()
    if dgp_id not in table:
        raise ValueError(f"dgp_id must be in 1..8, got {dgp_id}")
    kind, coeffs, noise = table[dgp_id]
    return DGPSpec(kind, coeffs, noise)


def _noise_json(noise) -> dict:
    if isinstance(noise, GaussianNoise):
        return {
            "family": "gaussian",
            "mean": noise.mean.tolist(),
            "covariance": noise.covariance.tolist(),
        }
    if isinstance(noise, ContaminatedNoise):
        return {
            "family": "contaminated",
            "base": _noise_json(noise.base),
            "outlier_count": noise.outlier_count,
            "outlier_rate": noise._rate(),
            "outlier_means": [m.tolist() for m in noise.outlier_means],
        }
    if isinstance(noise, SkewNormalNoise):
        return {
            "family": "skew_normal",
            "xi": noise.xi.tolist(),
            "omega": noise.omega.tolist(),
            "alpha": noise.alpha.tolist(),
            "recenter": noise.recenter,
        }
    if isinstance(noise, StudentTNoise):
        return {
            "family": "student_t",
            "mu": noise.mu.tolist(),
            "sigma": noise.sigma.tolist(),
            "dof": noise.dof,
        }
    raise TypeError(f"unknown noise family: {type(noise).__name__}")


def fixture_json(dgp_id: int) -> dict:
    """Fixture spec as plain JSON-ready data, entries at transcription precision."""
    spec = fixture(dgp_id)
    return {
        "dgp_id": dgp_id,
        "kind": spec.kind,
        "order": spec.order,
        "coefficients": [c.tolist() for c in spec.coefficients],
        "noise": _noise_json(spec.noise),
    }


def fixture_checksum(dgp_id: int) -> str:
    """SHA-256 over the canonical JSON form; guards transcription drift."""
    payload = json.dumps(fixture_json(dgp_id), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def simulate(spec: DGPSpec, n: int, seed: int, replicate: int = 0) -> MultivariateSeries:
    """Simulate n observations; deterministic per (spec, n, seed, replicate).

    VMA paths are exact (the required pre-sample innovations are drawn).
    VAR paths start from zero and discard a 500-step burn-in.
    """
    n = int(n)
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = stream_rng(seed, replicate, DOMAIN_SIMULATE)
    order = spec.order
    p = spec.p
    if spec.kind == "vma":
        innovations = spec.noise.draw(n + order, rng)
        out = innovations[order:].copy()
        for j, coeff in enumerate(spec.coefficients, start=1):
            out += innovations[order - j : order - j + n] @ coeff.T
        return MultivariateSeries(out)
    total = n + VAR_BURN_IN
    innovations = spec.noise.draw(total, rng)
    path = np.zeros((total, p))
    coeffs = spec.coefficients
    for t in range(total):
        x = innovations[t].copy()
        for j, coeff in enumerate(coeffs, start=1):
            if t - j >= 0:
                x += coeff @ path[t - j]
        path[t] = x
    return MultivariateSeries(path[VAR_BURN_IN:])


def population_truth(spec: DGPSpec) -> PopulationTruth:
    """Model-implied covariance and eigenstructure.

    VMA covariance is the closed-form sum over coefficient lags; VAR
    covariance solves the discrete Lyapunov equation by fixed-point iteration
    on the companion form (Frobenius tolerance 1e-12). Near-tied eigenvalues
    are flagged on the decomposition, not raised here.
    """
    k = spec.noise.true_covariance()
    p = spec.p
    if spec.kind == "vma":
        gamma = k.copy()
        for coeff in spec.coefficients:
            gamma += coeff @ k @ coeff.T
    else:
        if not spec.coefficients:
            gamma = k.copy()
        else:
            comp = _companion_matrix(spec.coefficients)
            dim = comp.shape[0]
            k_comp = np.zeros((dim, dim))
            k_comp[:p, :p] = k
            gamma_comp = k_comp.copy()
            for _ in range(100_000):
                nxt = comp @ gamma_comp @ comp.T + k_comp
                if np.linalg.norm(nxt - gamma_comp) <= _LYAPUNOV_TOL:
                    gamma_comp = nxt
                    break
                gamma_comp = nxt
            else:
                raise RuntimeError("Lyapunov fixed-point iteration did not converge")
            gamma = gamma_comp[:p, :p]
    gamma = (gamma + gamma.T) / 2.0
    return PopulationTruth(gamma, eigendecompose(gamma))
