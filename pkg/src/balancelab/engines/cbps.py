"""Covariate balancing propensity scores (just-identified form).

Instead of maximizing the likelihood, the logistic coefficients are
chosen so the inverse-probability weights exactly balance the moment
design between groups.  With as many balance conditions as
coefficients the system is square and a damped Newton iteration on the
moment vector solves it directly, warm-started from the ordinary
logistic fit.
"""

from __future__ import annotations

import numpy as np

from ..data import DesignMatrix
from .linalg import drop_collinear
from .logistic import irls_logit, _sigmoid
from .moments import MomentExpansion, expand_moments
from .weights import PropensityVector, WeightSet, ps_to_weights

_MOMENT_TOL = 1e-6
_MAX_ITER = 200


def _moments_ate(D: np.ndarray, T: np.ndarray, p: np.ndarray):
    n = D.shape[0]
    r = T / p - (1 - T) / (1 - p)
    g = D.T @ r / n
    d = T * (1 - p) / p + (1 - T) * p / (1 - p)
    J = -(D * d[:, None]).T @ D / n
    return g, J


def _moments_att(D: np.ndarray, T: np.ndarray, p: np.ndarray):
    n = D.shape[0]
    r = T - (1 - T) * p / (1 - p)
    g = D.T @ r / n
    d = (1 - T) * p / (1 - p)
    J = -(D * d[:, None]).T @ D / n
    return g, J


def solve_cbps(D: np.ndarray, T: np.ndarray, estimand: str,
               beta0: np.ndarray | None = None,
               max_iter: int = _MAX_ITER, tol: float = _MOMENT_TOL):
    """Newton iteration on the balance moments.

    Returns (beta, p, converged, iterations).  Falls back to the best
    iterate seen (smallest max |g|) when the tolerance is not reached.
    """
    moments = _moments_ate if estimand == "ATE" else _moments_att
    beta = np.zeros(D.shape[1]) if beta0 is None else beta0.copy()
    eta_cap = 30.0

    def probs(b):
        return np.clip(_sigmoid(np.clip(D @ b, -eta_cap, eta_cap)), 1e-6, 1 - 1e-6)

    p = probs(beta)
    g, J = moments(D, T, p)
    best = (np.max(np.abs(g)), beta.copy(), p.copy(), 0)
    for it in range(1, max_iter + 1):
        if best[0] < tol:
            return best[1], best[2], True, best[3]
        try:
            step = np.linalg.solve(J, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, g, rcond=None)[0]

        gnorm = np.max(np.abs(g))
        t = 1.0
        for _ in range(60):
            beta_try = beta - t * step
            p_try = probs(beta_try)
            g_try, J_try = moments(D, T, p_try)
            if np.max(np.abs(g_try)) < gnorm:
                break
            t /= 2.0
        else:
            break
        beta, p, g, J = beta_try, p_try, g_try, J_try
        if np.max(np.abs(g)) < best[0]:
            best = (np.max(np.abs(g)), beta.copy(), p.copy(), it)

    converged = bool(best[0] < tol)
    return best[1], best[2], converged, best[3]


def fit_cbps(dm: DesignMatrix, m: int, estimand: str | None = None,
             expansion: MomentExpansion | None = None,
             algorithm: str | None = None) -> WeightSet:
    """Balancing-score weights for moment order m.

    The coefficient design is [1, Z] where Z is the standardized moment
    expansion, so the intercept moment keeps the weighted group sizes
    tied down alongside the covariate balance conditions.
    """
    estimand = estimand or dm.effective_estimand
    exp_ = expansion if expansion is not None else expand_moments(dm, m, estimand)
    Z, names, dropped = drop_collinear(exp_.Z, list(exp_.names))
    D = np.column_stack([np.ones(dm.n), Z])
    T = dm.T.astype(float)

    beta0, p0, lr_conv, lr_its, lr_notes = irls_logit(D, T)
    beta, p, converged, iterations = solve_cbps(D, dm.T, estimand, beta0=beta0)

    notes = []
    if exp_.dropped:
        notes.append("dropped moment columns: " + ", ".join(exp_.dropped))
    if dropped:
        notes.append("dropped collinear columns: " + ", ".join(dropped))
    if not converged:
        notes.append("moment conditions not met at tolerance; best iterate kept")
    pv = PropensityVector(p=p, source=algorithm or f"CBPS{m}",
                          converged=converged, iterations=iterations,
                          notes=tuple(notes))
    ws = ps_to_weights(pv, dm.T, estimand)
    return ws
