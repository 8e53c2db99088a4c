"""Symmetric eigendecomposition with fixed ordering/sign conventions.

Every downstream statistic in this package depends on two conventions set
here: eigenvalues are sorted descending, and each eigenvector is sign-fixed
so that its entry of largest magnitude is positive (ties broken at the
lowest index). When two decompositions must be compared (bootstrap
replicates, Monte Carlo draws), use :func:`align_signs` against a reference
basis instead of relying on the global convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EigenDecomposition",
    "ProportionOfVariation",
    "NotSymmetricError",
    "ConvergenceError",
    "DegenerateEigenvaluesError",
    "eigendecompose",
    "align_signs",
    "proportion_of_variation",
    "DEGENERACY_RTOL",
]

# Adjacent eigenvalue gaps below DEGENERACY_RTOL * |trace| count as ties;
# the asymptotic covariance formulas divide by these gaps and refuse ties.
DEGENERACY_RTOL = 1e-8

_JACOBI_MAX_SWEEPS = 100
_JACOBI_OFF_TOL = 1e-12


class NotSymmetricError(ValueError):
    """Input matrix is not symmetric within tolerance."""


class ConvergenceError(RuntimeError):
    """Jacobi iteration failed to reach the off-diagonal tolerance."""


class DegenerateEigenvaluesError(ValueError):
    """Eigenvalue structure too close to a tie for the requested computation."""


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues (descending) and orthonormal eigenvectors (one per column)."""

    values: np.ndarray
    vectors: np.ndarray
    source_trace: float

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        vectors = np.array(self.vectors, dtype=float)
        if values.ndim != 1 or vectors.shape != (values.size, values.size):
            raise ValueError("values must be a p-vector and vectors a p x p matrix")
        if np.any(np.diff(values) > 0):
            raise ValueError("eigenvalues must be sorted descending")
        values.flags.writeable = False
        vectors.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "source_trace", float(self.source_trace))

    @property
    def p(self) -> int:
        return self.values.size

    def degenerate_gaps(self, rtol: float = DEGENERACY_RTOL) -> tuple:
        """Indices k where values[k] - values[k+1] is within rtol * |trace| of zero."""
        threshold = rtol * abs(self.source_trace)
        gaps = -np.diff(self.values)
        return tuple(int(k) for k in np.nonzero(gaps <= threshold)[0])

    @property
    def near_degenerate(self) -> bool:
        return bool(self.degenerate_gaps())


@dataclass(frozen=True)
class ProportionOfVariation:
    """Cumulative share of total variance explained by the leading components."""

    r: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        if r.ndim != 1 or r.size < 1:
            raise ValueError("r must be a nonempty vector")
        if np.any(np.diff(r) < 0) or r[-1] != 1.0 or np.any(r <= 0) or np.any(r > 1):
            raise ValueError("r must be nondecreasing in (0, 1] with final entry 1")
        r.flags.writeable = False
        object.__setattr__(self, "r", r)

    @property
    def p(self) -> int:
        return self.r.size


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make the max-|entry| of each column positive; first index wins ties."""
    out = vectors.copy()
    for k in range(out.shape[1]):
        lead = int(np.argmax(np.abs(out[:, k])))
        if out[lead, k] < 0:
            out[:, k] = -out[:, k]
    return out


def eigendecompose(m: np.ndarray, max_sweeps: int = _JACOBI_MAX_SWEEPS) -> EigenDecomposition:
    """Decompose a symmetric matrix by cyclic Jacobi rotations.

    Deterministic for a fixed input: rotations sweep the upper triangle in a
    fixed row-major order until the off-diagonal Frobenius norm drops below
    1e-12 times the input norm.

    Raises
    ------
    NotSymmetricError
        if ``m`` deviates from its transpose by more than 1e-8 relative.
    ConvergenceError
        if the sweep cap is reached before the tolerance (not observed for
        well-scaled inputs; the cap guards pathological values).
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    asym = np.max(np.abs(a - a.T)) if a.size else 0.0
    if asym > 1e-8 * max(scale, 1e-300):
        raise NotSymmetricError(
            f"matrix asymmetry {asym:.3e} exceeds 1e-8 relative tolerance"
        )
    a = (a + a.T) / 2.0
    p = a.shape[0]
    trace = float(np.trace(a))
    vectors = np.eye(p)

    if p == 1:
        return EigenDecomposition(a[0, :1].copy(), np.ones((1, 1)), trace)

    norm = float(np.linalg.norm(a))
    threshold = _JACOBI_OFF_TOL * norm
    off_mask = ~np.eye(p, dtype=bool)
    converged = False
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a[off_mask]))
        if off <= threshold:
            converged = True
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = a[i, j]
                if aij == 0.0:
                    continue
                tau = (a[j, j] - a[i, i]) / (2.0 * aij)
                if abs(tau) > 1e150:
                    t = 1.0 / (2.0 * tau)
                elif tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = 1.0 / (tau - math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # Two-sided rotation in the (i, j) plane.
                col_i = a[:, i].copy()
                col_j = a[:, j].copy()
                a[:, i] = c * col_i - s * col_j
                a[:, j] = s * col_i + c * col_j
                row_i = a[i, :].copy()
                row_j = a[j, :].copy()
                a[i, :] = c * row_i - s * row_j
                a[j, :] = s * row_i + c * row_j
                a[i, j] = 0.0
                a[j, i] = 0.0
                v_i = vectors[:, i].copy()
                v_j = vectors[:, j].copy()
                vectors[:, i] = c * v_i - s * v_j
                vectors[:, j] = s * v_i + c * v_j
    else:
        converged = False
    if not converged:
        off = float(np.linalg.norm(a[off_mask]))
        if off > threshold:
            raise ConvergenceError(
                f"Jacobi iteration did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {off:.3e}, tolerance {threshold:.3e})"
            )

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = _fix_signs(vectors[:, order])
    return EigenDecomposition(values, vectors, trace)


def align_signs(decomp: EigenDecomposition, reference: np.ndarray) -> EigenDecomposition:
    """Negate each eigenvector whose dot product with the reference column is negative.

    Eigenvalues are untouched. This replaces the global sign convention
    whenever two decompositions of nearby matrices must be compared.
    """
    reference = np.asarray(reference, dtype=float)
    if reference.shape != decomp.vectors.shape:
        raise ValueError(
            f"reference shape {reference.shape} does not match vectors "
            f"shape {decomp.vectors.shape}"
        )
    dots = np.einsum("ij,ij->j", decomp.vectors, reference)
    flip = np.where(dots < 0, -1.0, 1.0)
    return EigenDecomposition(decomp.values, decomp.vectors * flip, decomp.source_trace)


def proportion_of_variation(values: np.ndarray) -> ProportionOfVariation:
    """Partial-sum ratios r_k = sum_{i<=k} values_i / sum_i values_i.

    The final entry is exactly 1 because the last partial sum is the denominator.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 1:
        raise ValueError("values must be a nonempty vector")
    if np.any(values <= 0):
        raise ValueError("proportion of variation requires strictly positive eigenvalues")
    partial = np.cumsum(values)
    return ProportionOfVariation(partial / partial[-1])
