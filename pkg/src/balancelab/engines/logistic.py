"""Maximum-likelihood logistic regression via IRLS."""

from __future__ import annotations

import numpy as np

from ..data import DesignMatrix
from .linalg import drop_collinear
from .weights import PropensityVector

_SCORE_TOL = 1e-8
_DEV_TOL = 1e-10
_MAX_ITER = 100


def _sigmoid(eta):
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ez = np.exp(eta[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _deviance(y, p):
    p = np.clip(p, 1e-300, 1 - 1e-16)
    return -2.0 * (y @ np.log(p) + (1 - y) @ np.log(1 - p))


def irls_logit(D: np.ndarray, y: np.ndarray,
               max_iter: int = _MAX_ITER,
               score_tol: float = _SCORE_TOL,
               dev_tol: float = _DEV_TOL):
    """Fit a logit of y on the design D (caller includes the intercept).

    Columns are unit-scaled internally; the score tolerance applies on
    that scale.  Returns (beta, p, converged, iterations, notes).
    Perfect separation is detected by diverging coefficients with the
    fit approaching a perfect classifier; the last stable iterate is
    kept and a note is attached.
    """
    D = np.asarray(D, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = D.shape

    scale = D.std(axis=0, ddof=0)
    scale[scale == 0] = 1.0  # intercept and constants stay as-is
    Ds = D / scale

    beta = np.zeros(k)
    p = _sigmoid(Ds @ beta)
    dev = _deviance(y, p)
    notes = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        score = Ds.T @ (y - p)
        if np.max(np.abs(score)) < score_tol:
            converged = True
            break
        wdiag = np.clip(p * (1 - p), 1e-12, None)
        H = Ds.T @ (Ds * wdiag[:, None])
        try:
            delta = np.linalg.solve(H, score)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(H, score, rcond=None)[0]

        step = 1.0
        for _ in range(30):
            beta_try = beta + step * delta
            p_try = _sigmoid(Ds @ beta_try)
            dev_try = _deviance(y, p_try)
            if dev_try <= dev + 1e-12:
                break
            step /= 2.0
        else:
            notes.append("line search stalled")
            break

        # Separation: coefficients diverging while the fit approaches a
        # perfect classifier.  Keep the previous (stable) iterate.
        if np.max(np.abs(beta_try)) > 1e4 or (
                np.all(np.abs(y - p_try) < 1e-6) and np.max(np.abs(delta)) > 1.0):
            notes.append("separation detected; coefficients at last stable iterate")
            break

        rel_change = abs(dev - dev_try) / max(abs(dev), 1e-300)
        beta, p, dev = beta_try, p_try, dev_try
        if rel_change < dev_tol:
            converged = True
            break

    return beta / scale, p, converged, it, notes


def fit_logistic_ps(dm: DesignMatrix) -> PropensityVector:
    """Propensity scores from a logit of T on the design columns."""
    X, names, dropped = drop_collinear(dm.X, list(dm.column_names))
    notes = []
    if dropped:
        notes.append("dropped collinear columns: " + ", ".join(dropped))
    D = np.column_stack([np.ones(dm.n), X])
    beta, p, converged, iters, fit_notes = irls_logit(D, dm.T.astype(float))
    return PropensityVector(
        p=p, source="LR", converged=converged, iterations=iters,
        notes=tuple(notes + fit_notes))


def logit_coefficients(dm: DesignMatrix):
    """Intercept-first coefficient vector of the propensity logit
    (collinear columns dropped); exposed for oracle checks."""
    X, names, _ = drop_collinear(dm.X, list(dm.column_names))
    D = np.column_stack([np.ones(dm.n), X])
    beta, _, converged, _, _ = irls_logit(D, dm.T.astype(float))
    return beta, ["(Intercept)"] + names, converged
