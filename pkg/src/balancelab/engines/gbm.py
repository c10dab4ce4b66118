"""Gradient-boosted trees for propensity scores, with balance stopping.

Regression trees are fit to the Bernoulli-deviance gradient with
Newton leaf values.  The boosting path is evaluated every eval_stride
trees on covariate-balance criteria (mean |SMD| or max KS of the
induced weights) and the returned score is the one at the minimizing
iteration.  Both stopping rules share a single boosting path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..balance import BalanceProbe
from ..data import DesignMatrix
from .weights import P_CLIP, PropensityVector, ps_to_weights


@dataclass(frozen=True)
class BoostParams:
    max_trees: int = 5000
    shrinkage: float = 0.01
    depth: int = 3
    eval_stride: int = 25
    min_leaf: int = 10


_EPS = 1e-12


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _grow_tree(XT: np.ndarray, O_root: np.ndarray, g: np.ndarray,
               h: np.ndarray, F: np.ndarray, shrinkage: float,
               depth: int, min_leaf: int, scratch: np.ndarray) -> None:
    """One regression tree on (g, h); updates F in place.

    XT is the p x n transposed design.  O_root holds, per feature row,
    all sample indices sorted by that feature; child nodes inherit the
    sorted order by partition passing, so no re-sorting happens.
    scratch is a reusable boolean work vector of length n.
    """
    p = XT.shape[0]
    rows = np.arange(p)[:, None]
    frontier = [(O_root, 0)]
    while frontier:
        O, d = frontier.pop()
        nn = O.shape[1]
        if d >= depth or nn < 2 * min_leaf:
            _apply_leaf(O[0], g, h, F, shrinkage)
            continue
        XS = XT[rows, O]
        CG = np.cumsum(g[O], axis=1)
        CH = np.cumsum(h[O], axis=1)
        GL = CG[:, :-1]
        HL = CH[:, :-1]
        Gt = CG[:, -1:]
        Ht = CH[:, -1:]
        gains = (GL * GL / (HL + _EPS)
                 + (Gt - GL) ** 2 / (Ht - HL + _EPS)
                 - Gt * Gt / (Ht + _EPS))
        # a split is usable only between distinct values and when both
        # children keep at least min_leaf rows
        gains[XS[:, :-1] >= XS[:, 1:]] = -np.inf
        gains[:, :min_leaf - 1] = -np.inf
        gains[:, nn - min_leaf:] = -np.inf
        flat = int(np.argmax(gains))
        jb, pos = divmod(flat, nn - 1)
        if not np.isfinite(gains[jb, pos]) or gains[jb, pos] <= 0.0:
            _apply_leaf(O[0], g, h, F, shrinkage)
            continue
        left_idx = O[jb, :pos + 1]
        scratch[O[0]] = False
        scratch[left_idx] = True
        M = scratch[O]
        nl = pos + 1
        OL = O[M].reshape(p, nl)
        OR = O[~M].reshape(p, nn - nl)
        frontier.append((OL, d + 1))
        frontier.append((OR, d + 1))


def _apply_leaf(members: np.ndarray, g: np.ndarray, h: np.ndarray,
                F: np.ndarray, shrinkage: float) -> None:
    value = g[members].sum() / (h[members].sum() + _EPS)
    F[members] += shrinkage * value


def boost_path(dm: DesignMatrix, estimand: str, params: BoostParams,
               probe: BalanceProbe | None = None):
    """Run the full boosting path, evaluating both stopping criteria.

    Returns a dict with, per criterion name ('ES', 'KS'): best
    criterion value, tree count, and the score vector p at that count,
    plus the list of (trees, es, ks) evaluations and notes.
    """
    X = dm.X
    T = dm.T.astype(np.float64)
    n = dm.n
    probe = probe or BalanceProbe(X, dm.T, estimand)
    notes = []
    if n < 50:
        notes.append("fewer than 50 rows; boosted scores may be unreliable")

    pbar = float(T.mean())
    pbar = min(max(pbar, P_CLIP), 1 - P_CLIP)
    F = np.full(n, np.log(pbar / (1 - pbar)))
    XT = np.ascontiguousarray(X.T)
    O_root = np.argsort(X, axis=0, kind="stable").T.copy()
    scratch = np.zeros(n, dtype=bool)

    best = {"ES": [np.inf, 0, None], "KS": [np.inf, 0, None]}
    evals = []

    def evaluate(trees: int):
        p = np.clip(_sigmoid(F), P_CLIP, 1 - P_CLIP)
        w = _ipw(p, dm.T, estimand)
        smds = probe.smds(w)
        es = float(np.mean(smds[np.isfinite(smds)]))
        ks = probe.max_ks(w)
        evals.append((trees, es, ks))
        for key, val in (("ES", es), ("KS", ks)):
            if val < best[key][0]:
                best[key] = [val, trees, p.copy()]

    evaluate(0)
    for t in range(1, params.max_trees + 1):
        p = _sigmoid(F)
        g = T - p
        h = p * (1 - p)
        _grow_tree(XT, O_root, g, h, F, params.shrinkage,
                   params.depth, params.min_leaf, scratch)
        if t % params.eval_stride == 0 or t == params.max_trees:
            evaluate(t)

    final_trees = evals[-1][0]
    out = {"evals": evals, "notes": notes}
    for key in ("ES", "KS"):
        val, trees, p = best[key]
        knotes = list(notes)
        if trees == final_trees and final_trees > 0:
            knotes.append("criterion still improving at max_trees; "
                          "increase max_trees")
        out[key] = {"criterion": val, "trees": trees, "p": p,
                    "notes": tuple(knotes)}
    return out


def _ipw(p: np.ndarray, T: np.ndarray, estimand: str) -> np.ndarray:
    if estimand == "ATE":
        return np.where(T == 1, 1.0 / p, 1.0 / (1.0 - p))
    return np.where(T == 1, 1.0, p / (1.0 - p))


def fit_gbm_pair(dm: DesignMatrix, estimand: str | None = None,
                 params: BoostParams | None = None):
    """Both GBM stopping rules from one shared boosting path.

    Returns {'GBM_ES': PropensityVector, 'GBM_KS': PropensityVector}
    with chosen tree counts recorded in iterations.
    """
    estimand = estimand or dm.effective_estimand
    params = params or BoostParams()
    path = boost_path(dm, estimand, params)
    out = {}
    for algo, key in (("GBM_ES", "ES"), ("GBM_KS", "KS")):
        r = path[key]
        out[algo] = PropensityVector(
            p=r["p"], source=algo, converged=True,
            iterations=r["trees"], notes=r["notes"])
    return out


def fit_gbm_ps(dm: DesignMatrix, stop_rule: str, estimand: str | None = None,
               params: BoostParams | None = None) -> PropensityVector:
    """Boosted propensity scores stopped by 'ES' (mean |SMD|) or 'KS'."""
    if stop_rule not in ("ES", "KS"):
        raise ValueError(f"unknown stop rule {stop_rule!r}")
    pair = fit_gbm_pair(dm, estimand, params)
    return pair[f"GBM_{stop_rule}"]
