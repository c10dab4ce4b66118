"""Covariate balance diagnostics for weighted two-group comparisons.

Standardized mean differences, weighted Kolmogorov-Smirnov distances,
and Kish effective sample sizes, assembled into a per-column table
with an algorithm recommendation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import DesignMatrix
from .errors import EmptyGroupError

KS_THRESHOLD = 0.1
SMD_THRESHOLD = 0.1
KS_TIE_WINDOW = 0.005


def render_percent(percent: float) -> str:
    """Integer percent with half-up rounding away from zero, e.g. '94%'."""
    if percent >= 0:
        return f"{int(math.floor(percent + 0.5))}%"
    return f"{-int(math.floor(-percent + 0.5))}%"


def _unweighted_sd(x: np.ndarray) -> float:
    if x.size < 2:
        return 0.0
    return float(np.std(x, ddof=1))


def smd_denominator(x: np.ndarray, T: np.ndarray, estimand: str) -> float:
    """Reference sd for the SMD, from the UNWEIGHTED sample.

    Pooled sqrt((s1^2 + s0^2)/2) for ATE; treated-group sd for ATT.
    Held fixed across weightings so table columns stay comparable.
    """
    if estimand == "ATT":
        return _unweighted_sd(x[T == 1])
    s1 = _unweighted_sd(x[T == 1])
    s0 = _unweighted_sd(x[T == 0])
    return math.sqrt((s1 * s1 + s0 * s0) / 2.0)


def weighted_smd(x: np.ndarray, T: np.ndarray, w: np.ndarray,
                 estimand: str) -> float:
    """|weighted mean difference| / unweighted reference sd.

    A zero reference sd yields 0 when the weighted means agree and an
    +inf sentinel otherwise (flagged downstream).
    """
    w1 = w[T == 1]
    w0 = w[T == 0]
    if w1.sum() <= 0 or w0.sum() <= 0:
        raise EmptyGroupError("a group has no positive weight")
    m1 = float(np.dot(w1, x[T == 1]) / w1.sum())
    m0 = float(np.dot(w0, x[T == 0]) / w0.sum())
    denom = smd_denominator(x, T, estimand)
    diff = abs(m1 - m0)
    if denom == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return diff / denom


def _wecdf_at(xs: np.ndarray, cum: np.ndarray, grid: np.ndarray) -> np.ndarray:
    # xs sorted ascending, cum = normalized cumulative weights over xs
    idx = np.searchsorted(xs, grid, side="right")
    out = np.zeros(grid.size)
    nz = idx > 0
    out[nz] = cum[idx[nz] - 1]
    return out


def weighted_ks(x: np.ndarray, T: np.ndarray, w: np.ndarray) -> float:
    """Max gap between the two weighted empirical CDFs.

    Evaluated at every distinct sample value; weights normalized
    within group.
    """
    w1 = w[T == 1]
    w0 = w[T == 0]
    if w1.sum() <= 0 or w0.sum() <= 0:
        raise EmptyGroupError("a group has no positive weight")
    grid = np.unique(x)
    parts = []
    for xg, wg in ((x[T == 1], w1), (x[T == 0], w0)):
        order = np.argsort(xg, kind="stable")
        xs = xg[order]
        cum = np.cumsum(wg[order])
        cum /= cum[-1]
        parts.append(_wecdf_at(xs, cum, grid))
    return float(np.max(np.abs(parts[0] - parts[1])))


def ess(w: np.ndarray) -> float:
    """Kish effective sample size (sum w)^2 / sum w^2."""
    s = w.sum()
    if s <= 0:
        raise EmptyGroupError("weights sum to zero")
    return float(s * s / np.dot(w, w))


class BalanceProbe:
    """Reusable evaluator of balance summaries for changing weights.

    Presorts every column once so repeated evaluations (e.g. along a
    boosting path) cost one cumulative sum per column instead of a
    fresh sort.  Produces the same numbers as weighted_smd/weighted_ks.
    """

    def __init__(self, X: np.ndarray, T: np.ndarray, estimand: str):
        self.T = T
        self.i1 = np.flatnonzero(T == 1)
        self.i0 = np.flatnonzero(T == 0)
        self.X1 = X[self.i1]
        self.X0 = X[self.i0]
        self.denoms = np.array([
            smd_denominator(X[:, j], T, estimand) for j in range(X.shape[1])])
        self.cols = []
        for j in range(X.shape[1]):
            grid = np.unique(X[:, j])
            o1 = np.argsort(X[self.i1, j], kind="stable")
            o0 = np.argsort(X[self.i0, j], kind="stable")
            pos1 = np.searchsorted(X[self.i1, j][o1], grid, side="right")
            pos0 = np.searchsorted(X[self.i0, j][o0], grid, side="right")
            self.cols.append((o1, o0, pos1, pos0))

    def smds(self, w: np.ndarray) -> np.ndarray:
        w1 = w[self.i1]
        w0 = w[self.i0]
        m1 = w1 @ self.X1 / w1.sum()
        m0 = w0 @ self.X0 / w0.sum()
        diff = np.abs(m1 - m0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = diff / self.denoms
        out[(self.denoms == 0) & (diff == 0)] = 0.0
        out[(self.denoms == 0) & (diff > 0)] = np.inf
        return out

    def kss(self, w: np.ndarray) -> np.ndarray:
        w1 = w[self.i1]
        w0 = w[self.i0]
        out = np.empty(len(self.cols))
        for j, (o1, o0, pos1, pos0) in enumerate(self.cols):
            c1 = np.cumsum(w1[o1])
            c0 = np.cumsum(w0[o0])
            F1 = np.where(pos1 > 0, c1[np.maximum(pos1 - 1, 0)] / c1[-1], 0.0)
            F0 = np.where(pos0 > 0, c0[np.maximum(pos0 - 1, 0)] / c0[-1], 0.0)
            out[j] = np.max(np.abs(F1 - F0))
        return out

    def mean_abs_smd(self, w: np.ndarray) -> float:
        return float(np.mean(self.smds(w)))

    def max_ks(self, w: np.ndarray) -> float:
        return float(np.max(self.kss(w)))


@dataclass(frozen=True)
class EssEntry:
    total: float
    percent: float
    per_group: tuple[float, float]  # (control, treated)


@dataclass(frozen=True)
class BalanceReport:
    row_names: tuple[str, ...]
    columns: tuple[str, ...]  # "Unweighted" first, then algorithm ids
    smd: np.ndarray  # rows x columns
    ks: np.ndarray
    mean_smd: np.ndarray  # per column
    max_smd: np.ndarray
    mean_ks: np.ndarray
    max_ks: np.ndarray
    ess: dict[str, EssEntry]
    recommended: str
    rationale: str
    estimand: str
    n: int
    flagged: tuple[tuple[str, str], ...] = ()

    def column_index(self, name: str) -> int:
        return self.columns.index(name)

    def summary_for(self, name: str) -> dict:
        j = self.column_index(name)
        e = self.ess[name]
        return {
            "mean_smd": float(self.mean_smd[j]),
            "max_smd": float(self.max_smd[j]),
            "mean_ks": float(self.mean_ks[j]),
            "max_ks": float(self.max_ks[j]),
            "ess_total": e.total,
            "ess_percent": e.percent,
            "ess_control": e.per_group[0],
            "ess_treated": e.per_group[1],
        }


def _recommend(columns, max_smd, max_ks, ess_totals):
    # algorithm columns only; "Unweighted" sits at index 0
    algs = list(range(1, len(columns)))
    if not algs:
        return columns[0], "no weighting algorithm produced weights"
    eligible = [j for j in algs
                if max_ks[j] < KS_THRESHOLD and max_smd[j] < SMD_THRESHOLD]
    if not eligible:
        j = min(algs, key=lambda j: (max_ks[j], j))
        return columns[j], (
            "no algorithm achieved balance (max KS and max SMD below "
            f"{KS_THRESHOLD:g}); {columns[j]} has the smallest max KS "
            f"{max_ks[j]:.3f}")
    best_ks = min(max_ks[j] for j in eligible)
    window = [j for j in eligible if max_ks[j] <= best_ks + KS_TIE_WINDOW]
    j = max(window, key=lambda j: (ess_totals[j], -j))
    if len(window) > 1:
        return columns[j], (
            f"{columns[j]}: max KS {max_ks[j]:.3f} within {KS_TIE_WINDOW:g} "
            f"of the best ({best_ks:.3f}); largest ESS "
            f"{ess_totals[j]:.0f} breaks the tie")
    return columns[j], (
        f"{columns[j]}: smallest max KS {max_ks[j]:.3f} among algorithms "
        "with max KS and max SMD below 0.1")


def build_balance_report(dm: DesignMatrix, weight_sets: list,
                         estimand: str | None = None) -> BalanceReport:
    """Balance table over the encoded confounder columns.

    One column per weighting plus an unweighted baseline; recommends
    the algorithm with the smallest max KS among those with max KS and
    max SMD below 0.1, breaking near-ties (within 0.005) by ESS.
    """
    estimand = estimand or dm.effective_estimand
    columns = ["Unweighted"] + [ws.algorithm for ws in weight_sets]
    vectors = [np.ones(dm.n)] + [ws.w for ws in weight_sets]
    rows = list(dm.column_names)
    smd = np.zeros((len(rows), len(columns)))
    ks = np.zeros_like(smd)
    ess_map: dict[str, EssEntry] = {}
    flagged = []
    for j, (name, w) in enumerate(zip(columns, vectors)):
        for i in range(len(rows)):
            smd[i, j] = weighted_smd(dm.X[:, i], dm.T, w, estimand)
            ks[i, j] = weighted_ks(dm.X[:, i], dm.T, w)
            if not np.isfinite(smd[i, j]):
                flagged.append((rows[i], name))
        e0 = ess(w[dm.T == 0])
        e1 = ess(w[dm.T == 1])
        total = e0 + e1
        ess_map[name] = EssEntry(total=total, percent=100.0 * total / dm.n,
                                 per_group=(e0, e1))

    finite = np.where(np.isfinite(smd), smd, np.nan)
    mean_smd = np.nanmean(finite, axis=0)
    max_smd = np.max(smd, axis=0)
    mean_ks = np.mean(ks, axis=0)
    max_ks = np.max(ks, axis=0)
    ess_totals = [ess_map[c].total for c in columns]
    recommended, rationale = _recommend(columns, max_smd, max_ks, ess_totals)
    return BalanceReport(
        row_names=tuple(rows), columns=tuple(columns), smd=smd, ks=ks,
        mean_smd=mean_smd, max_smd=max_smd, mean_ks=mean_ks, max_ks=max_ks,
        ess=ess_map, recommended=recommended, rationale=rationale,
        estimand=estimand, n=dm.n, flagged=tuple(flagged))
