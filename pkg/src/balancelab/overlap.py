"""Overlap diagnostics and tail trimming of confounders.

Densities use a Gaussian kernel with Silverman's bandwidth; trims drop
whole rows so every confounder's density shifts together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DesignMatrix
from .errors import DegenerateDensityError, EmptyGroupError


@dataclass(frozen=True)
class TrimRule:
    """Drop rows strictly below ``lower_cut`` or above ``upper_cut``."""

    confounder: str
    lower_cut: float | None = None
    upper_cut: float | None = None

    def __post_init__(self):
        if self.lower_cut is None and self.upper_cut is None:
            raise ValueError("a trim rule needs at least one cut")
        if (self.lower_cut is not None and self.upper_cut is not None
                and self.lower_cut > self.upper_cut):
            raise ValueError("lower_cut must not exceed upper_cut")


@dataclass(frozen=True)
class DensityCurve:
    confounder: str
    group: int
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float


def silverman_bandwidth(values: np.ndarray) -> float:
    """0.9 * min(sd, IQR/1.34) * n^(-1/5), with the usual sd fallback
    when the IQR collapses to zero."""
    x = np.asarray(values, dtype=float)
    n = x.size
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        spread = sd
    if spread <= 0:
        raise DegenerateDensityError("all values identical")
    return 0.9 * spread * n ** (-0.2)


def density(values, grid_size: int = 201) -> DensityCurve:
    """Gaussian-kernel density on an even grid spanning the data ±3 bandwidths."""
    x = np.asarray(values, dtype=float)
    if np.unique(x).size < 2:
        raise DegenerateDensityError("need at least 2 distinct values")
    bw = silverman_bandwidth(x)
    lo, hi = x.min() - 3 * bw, x.max() + 3 * bw
    grid = np.linspace(lo, hi, grid_size)
    # n x G kernel matrix in chunks to bound memory
    dens = np.zeros(grid_size)
    norm = 1.0 / (x.size * bw * np.sqrt(2 * np.pi))
    step = max(1, 2_000_000 // grid_size)
    for start in range(0, x.size, step):
        chunk = x[start:start + step, None]
        dens += np.exp(-0.5 * ((grid[None, :] - chunk) / bw) ** 2).sum(axis=0)
    return DensityCurve(confounder="", group=-1, grid=grid,
                        density=dens * norm, bandwidth=bw)


def group_densities(dm: DesignMatrix, grid_size: int = 201) -> list:
    """Density curves for every numeric confounder, one per group.

    Degenerate columns (a group with a single distinct value) are skipped;
    the UI renders a spike marker from the summaries instead.
    """
    curves = []
    for name in dm.numeric_cols:
        x = dm.col(name)
        for g in (0, 1):
            vals = x[dm.T == g]
            try:
                c = density(vals, grid_size)
            except DegenerateDensityError:
                continue
            curves.append(DensityCurve(
                confounder=name, group=g, grid=c.grid,
                density=c.density, bandwidth=c.bandwidth))
    return curves


def apply_trims(dm: DesignMatrix, rules) -> tuple[DesignMatrix, np.ndarray]:
    """Drop rows excluded by ANY rule; returns the surviving design and
    the removed original row ids.  Cuts are strict inequalities, so
    boundary values stay.  Idempotent and order-independent."""
    rules = list(rules)
    for rule in rules:
        if rule.confounder not in dm.numeric_cols:
            raise KeyError(
                f"{rule.confounder!r} is not a numeric design confounder")
    removed = np.zeros(dm.n, dtype=bool)
    for rule in rules:
        x = dm.col(rule.confounder)
        if rule.lower_cut is not None:
            removed |= x < rule.lower_cut
        if rule.upper_cut is not None:
            removed |= x > rule.upper_cut
    keep = ~removed
    T_kept = dm.T[keep]
    if (T_kept == 0).sum() == 0 or (T_kept == 1).sum() == 0:
        raise EmptyGroupError("trimming would empty a treatment group")
    return dm.restrict(keep), dm.row_ids[removed]


def overlap_flags(dm: DesignMatrix, lower_q: float = 1.0, upper_q: float = 99.0) -> list:
    """Advisory per-confounder overlap check.

    Flags a design column when the two groups' [1%, 99%] quantile ranges
    fail to intersect.  Never blocks the pipeline.
    """
    if (dm.T == 0).sum() == 0 or (dm.T == 1).sum() == 0:
        raise EmptyGroupError("both groups must be non-empty")
    flags = []
    for j, name in enumerate(dm.column_names):
        x = dm.X[:, j]
        lo0, hi0 = np.percentile(x[dm.T == 0], [lower_q, upper_q])
        lo1, hi1 = np.percentile(x[dm.T == 1], [lower_q, upper_q])
        disjoint = hi0 < lo1 or hi1 < lo0
        flags.append({
            "confounder": name,
            "flagged": bool(disjoint),
            "control_range": (float(lo0), float(hi0)),
            "treated_range": (float(lo1), float(hi1)),
        })
    return flags
