"""Weighted outcome regression with design-based standard errors.

The doubly-robust step: regress the outcome on treatment plus every
encoded confounder using the balancing weights, so the effect estimate
is consistent when either the weight model or the outcome mean is
right.  Standard errors are HC1 sandwich estimates treating the
weights as fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .data import Dataset, DesignMatrix, ParseOptions, export_csv, take_rows
from .engines.weights import WeightSet
from .errors import CollinearityError

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class CoefRow:
    term: str
    estimate: float
    se: float
    t: float
    p: float


@dataclass(frozen=True)
class EffectEstimate:
    rows: tuple  # CoefRow, ordered: intercept, treatment, confounders
    effect: float
    algorithm_used: str
    estimand: str
    n_used: int

    def row(self, term: str) -> CoefRow:
        for r in self.rows:
            if r.term == term:
                return r
        raise KeyError(term)


def _t_stat(est: float, se: float) -> float:
    if se > 0:
        return est / se
    return 0.0 if est == 0.0 else np.inf * np.sign(est)


def weighted_least_squares(A: np.ndarray, y: np.ndarray, w: np.ndarray,
                           names: list):
    """WLS via pivoted QR on the sqrt-weight scaled design.

    Returns (beta, cov) where cov is the HC1 sandwich. Raises
    CollinearityError naming the dependent columns on rank deficiency.
    """
    if not np.all(np.isfinite(y)):
        raise ValueError("outcome contains non-finite values")
    if not np.all(np.isfinite(A)):
        raise ValueError("design contains non-finite values")
    n, k = A.shape
    sw = np.sqrt(w)
    As = A * sw[:, None]
    ys = y * sw
    Q, R, piv = linalg.qr(As, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > _RANK_TOL * max(diag[0], 1.0)))
    if rank < k:
        dropped = [names[j] for j in piv[rank:]]
        raise CollinearityError(
            "design is rank deficient under the weighted inner product",
            columns=dropped)

    beta_piv = linalg.solve_triangular(R, Q.T @ ys)
    beta = np.empty(k)
    beta[piv] = beta_piv

    resid = y - A @ beta
    # bread = (A' W A)^-1 reconstructed from the pivoted R factor
    Rinv = linalg.solve_triangular(R, np.eye(k))
    bread_piv = Rinv @ Rinv.T
    bread = np.empty((k, k))
    bread[np.ix_(piv, piv)] = bread_piv
    B = A * (w * resid)[:, None]
    meat = B.T @ B
    cov = bread @ meat @ bread * (n / (n - k))
    return beta, cov


def fit_doubly_robust(dm: DesignMatrix, ws: WeightSet) -> EffectEstimate:
    """Weighted regression of the outcome on treatment and confounders.

    Term order matches the design: intercept, treatment, then each
    encoded confounder column.  p-values use t(n - k).  When the
    design was label-flipped (ATC run as ATT) the coefficients are
    mapped back to the original treatment coding, which only changes
    the intercept and the sign of the treatment term.
    """
    if dm.Y is None:
        raise ValueError("design has no outcome column")
    n = dm.n
    A = np.column_stack([np.ones(n), dm.T.astype(float), dm.X])
    names = ["(Intercept)", dm.treatment_name] + list(dm.column_names)
    beta, cov = weighted_least_squares(A, dm.Y, ws.w, names)
    k = A.shape[1]
    if dm.flipped:
        L = np.eye(k)
        L[0, 1] = 1.0
        L[1, 1] = -1.0
        beta = L @ beta
        cov = L @ cov @ L.T
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    rows = []
    for j, name in enumerate(names):
        t = _t_stat(float(beta[j]), float(se[j]))
        if np.isfinite(t):
            p = 2.0 * float(stats.t.sf(abs(t), n - k))
        else:
            p = 0.0
        rows.append(CoefRow(term=name, estimate=float(beta[j]),
                            se=float(se[j]), t=float(t), p=p))
    return EffectEstimate(rows=tuple(rows), effect=float(beta[1]),
                          algorithm_used=ws.algorithm,
                          estimand=dm.estimand, n_used=n)


def export_data_and_weights(data: Dataset, dm: DesignMatrix,
                            weight_sets: dict, fmt: str = "csv") -> bytes:
    """Retained rows of the original data plus one weight column per
    algorithm, as CSV or TSV bytes."""
    if fmt not in ("csv", "tsv"):
        raise ValueError(f"unknown export format {fmt!r}")
    sub = take_rows(data, dm.row_ids)
    extras = [(aid, ws.w) for aid, ws in weight_sets.items()]
    sep = "comma" if fmt == "csv" else "tab"
    return export_csv(sub, ParseOptions(separator=sep), extra_columns=extras)
