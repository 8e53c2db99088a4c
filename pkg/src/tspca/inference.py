"""Loading significance tests, proportion confidence intervals, table rendering."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .eigen import EigenDecomposition, ProportionOfVariation

__all__ = [
    "LoadingTestResult",
    "ProportionCI",
    "test_loadings",
    "proportion_ci",
    "loading_table",
    "LoadingTable",
    "render_text",
    "render_csv",
    "loading_test_json",
]


@dataclass(frozen=True)
class LoadingTestResult:
    """Entrywise two-sided normal tests of zero loadings.

    Rows index components, columns index variables. ``sign_map`` reduces the
    decision to '+', '-' or '' (suppressed).
    """

    estimate: np.ndarray
    sd: np.ndarray
    z: np.ndarray
    p_value: np.ndarray
    significant: np.ndarray
    sign_map: np.ndarray
    alpha: float

    def __post_init__(self):
        sig = np.asarray(self.significant)
        signs = np.asarray(self.sign_map)
        est = np.asarray(self.estimate)
        if np.any((signs == "+") & (est < 0)) or np.any((signs == "-") & (est > 0)):
            raise ValueError("sign map contradicts the estimates")
        if np.any(sig != (signs != "")):
            raise ValueError("sign map must mark exactly the significant entries")


@dataclass(frozen=True)
class ProportionCI:
    """Normal confidence bands for the proportions of variation, clamped to [0, 1]."""

    r: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    alpha: float

    def __post_init__(self):
        if np.any(self.lower > self.r) or np.any(self.upper < self.r):
            raise ValueError("interval must contain the point estimate")


def test_loadings(
    decomp: EigenDecomposition,
    sd: np.ndarray,
    alpha: float = 0.05,
    bonferroni: bool = False,
) -> LoadingTestResult:
    """Test each loading against zero with estimated standard deviations.

    An entry is significant iff |estimate / sd| strictly exceeds the normal
    quantile at ``1 - alpha/2`` (boundary values are not significant). Zero
    sds degenerate gracefully: a nonzero estimate is significant, a zero one
    is suppressed. ``bonferroni`` divides alpha by the number of cells.
    """
    sd = np.asarray(sd, dtype=float)
    estimate = decomp.vectors.T.copy()  # row k = loadings of component k
    if sd.shape != estimate.shape:
        raise ValueError(f"sd shape {sd.shape} does not match loadings {estimate.shape}")
    if np.any(sd < 0):
        raise ValueError("standard deviations must be nonnegative")
    if not 0 < alpha <= 0.5:
        raise ValueError("alpha must be in (0, 0.5]")
    level = alpha / estimate.size if bonferroni else alpha
    crit = float(stats.norm.ppf(1.0 - level / 2.0))

    z = np.zeros_like(estimate)
    positive_sd = sd > 0
    z[positive_sd] = estimate[positive_sd] / sd[positive_sd]
    z[~positive_sd & (estimate != 0)] = np.inf * np.sign(estimate[~positive_sd & (estimate != 0)])
    p_value = 2.0 * stats.norm.sf(np.abs(z))
    significant = np.abs(z) > crit

    sign_map = np.full(estimate.shape, "", dtype=object)
    sign_map[significant & (estimate > 0)] = "+"
    sign_map[significant & (estimate < 0)] = "-"
    return LoadingTestResult(estimate, sd, z, p_value, significant, sign_map, alpha)


def proportion_ci(
    r: ProportionOfVariation, sd_r: np.ndarray, alpha: float = 0.05
) -> ProportionCI:
    """Normal intervals r_k +- z * sd_k, clamped to [0, 1].

    The last component's proportion is identically 1, so its interval is the
    degenerate point whenever its sd is 0.
    """
    sd_r = np.asarray(sd_r, dtype=float)
    if sd_r.shape != r.r.shape:
        raise ValueError("sd vector must match the proportion vector")
    if np.any(sd_r < 0):
        raise ValueError("standard deviations must be nonnegative")
    if not 0 < alpha <= 0.5:
        raise ValueError("alpha must be in (0, 0.5]")
    crit = float(stats.norm.ppf(1.0 - alpha / 2.0))
    lower = np.clip(r.r - crit * sd_r, 0.0, 1.0)
    upper = np.clip(r.r + crit * sd_r, 0.0, 1.0)
    return ProportionCI(r.r.copy(), lower, upper, alpha)


@dataclass(frozen=True)
class LoadingTable:
    """Sign table of loadings: rows are components, columns are variables."""

    columns: tuple
    rows: tuple  # (label, tuple of cells)
    sectors: Optional[tuple]
    note: str


def loading_table(
    result: LoadingTestResult,
    variable_names: Optional[Sequence[str]] = None,
    sector_labels: Optional[Sequence[str]] = None,
    truncation_threshold: Optional[float] = None,
) -> LoadingTable:
    """Reduce a test result to a '+'/'-'/blank table.

    With ``truncation_threshold`` set, the table instead keeps entries whose
    magnitude reaches the threshold — a screening heuristic, not a test —
    and says so in the note.
    """
    p_components, p_vars = result.estimate.shape
    if variable_names is None:
        variable_names = [f"X{i + 1}" for i in range(p_vars)]
    if len(variable_names) != p_vars:
        raise ValueError("variable_names length must match the number of variables")
    if sector_labels is not None and len(sector_labels) != p_vars:
        raise ValueError("sector_labels length must match the number of variables")

    if truncation_threshold is None:
        cells = result.sign_map
        note = f"two-sided tests at level {result.alpha:g}"
    else:
        keep = np.abs(result.estimate) >= truncation_threshold
        cells = np.full(result.estimate.shape, "", dtype=object)
        cells[keep & (result.estimate > 0)] = "+"
        cells[keep & (result.estimate < 0)] = "-"
        note = (
            f"screening by |loading| >= {truncation_threshold:g} (non-inferential)"
        )
    rows = tuple(
        (f"PC{k + 1}", tuple(cells[k])) for k in range(p_components)
    )
    return LoadingTable(
        columns=tuple(variable_names),
        rows=rows,
        sectors=tuple(sector_labels) if sector_labels is not None else None,
        note=note,
    )


def _sector_breaks(sectors) -> set:
    breaks = set()
    if sectors:
        for idx in range(1, len(sectors)):
            if sectors[idx] != sectors[idx - 1]:
                breaks.add(idx)
    return breaks


def render_text(table: LoadingTable) -> str:
    """Fixed-width rendering with separators between sector groups."""
    breaks = _sector_breaks(table.sectors)
    widths = [max(len(c), 2) for c in table.columns]
    label_width = max(len(label) for label, _ in table.rows)

    def format_row(label, cells):
        parts = [label.ljust(label_width)]
        for idx, (cell, width) in enumerate(zip(cells, widths)):
            sep = " | " if idx in breaks else "  "
            parts.append(sep + str(cell).rjust(width))
        return "".join(parts)

    lines = [format_row("", table.columns)]
    for label, cells in table.rows:
        lines.append(format_row(label, cells))
    lines.append(f"note: {table.note}")
    return "\n".join(lines) + "\n"


def render_csv(table: LoadingTable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["component", *table.columns])
    if table.sectors is not None:
        writer.writerow(["sector", *table.sectors])
    for label, cells in table.rows:
        writer.writerow([label, *cells])
    return buffer.getvalue()


def loading_test_json(
    result: LoadingTestResult, variable_names: Optional[Sequence[str]] = None
) -> dict:
    """Full numeric detail per cell, JSON-ready."""
    p_components, p_vars = result.estimate.shape
    if variable_names is None:
        variable_names = [f"X{i + 1}" for i in range(p_vars)]
    cells = []
    for k in range(p_components):
        for kp in range(p_vars):
            cells.append(
                {
                    "component": k + 1,
                    "variable": variable_names[kp],
                    "estimate": float(result.estimate[k, kp]),
                    "sd": float(result.sd[k, kp]),
                    "z": float(result.z[k, kp]),
                    "p_value": float(result.p_value[k, kp]),
                    "significant": bool(result.significant[k, kp]),
                    "sign": str(result.sign_map[k, kp]),
                }
            )
    return {"alpha": result.alpha, "cells": cells}


# Keep pytest from collecting the library function as a test.
test_loadings.__test__ = False  # type: ignore[attr-defined]
