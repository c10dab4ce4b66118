"""Entropy balancing: exponential-tilt weights solved in the dual.

The primal minimizes KL divergence to uniform weights subject to exact
moment constraints; the dual is the strictly convex log-partition
function, minimized by Newton's method with backtracking line search.
"""

from __future__ import annotations

import numpy as np

from ..data import DesignMatrix
from ..errors import InfeasibleTargetError
from .moments import MomentExpansion, expand_moments
from .weights import WeightSet

_CONSTRAINT_TOL = 1e-8
_LAMBDA_DIVERGE = 1e6
_MAX_ITER = 200


def eb_dual_value(lam: np.ndarray, Z: np.ndarray, target: np.ndarray) -> float:
    """log mean exp(lam . (z_i - target)); the dual objective."""
    a = (Z - target) @ lam
    amax = a.max()
    return float(amax + np.log(np.mean(np.exp(a - amax))))


def eb_dual_grad(lam: np.ndarray, Z: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Gradient of the dual: the weighted moment violation."""
    w = _tilt_weights(lam, Z)
    return w @ Z - target


def _tilt_weights(lam: np.ndarray, Z: np.ndarray) -> np.ndarray:
    a = Z @ lam
    a -= a.max()
    e = np.exp(a)
    return e / e.sum()


def solve_entropy_tilt(Z: np.ndarray, target: np.ndarray,
                       max_iter: int = _MAX_ITER,
                       tol: float = _CONSTRAINT_TOL):
    """Find weights w_i (summing to 1) with w @ Z == target.

    Returns (weights, lam, iterations).  Raises InfeasibleTargetError
    when the dual diverges, naming the worst-violated constraint index.
    """
    n, q = Z.shape
    lam = np.zeros(q)
    value = eb_dual_value(lam, Z, target)
    for it in range(1, max_iter + 1):
        w = _tilt_weights(lam, Z)
        grad = w @ Z - target
        if np.max(np.abs(grad)) < tol:
            return w, lam, it - 1
        zbar = w @ Z
        H = (Z * w[:, None]).T @ Z - np.outer(zbar, zbar)
        H[np.diag_indices_from(H)] += 1e-12
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]

        t = 1.0
        for _ in range(50):
            lam_try = lam - t * step
            val_try = eb_dual_value(lam_try, Z, target)
            if val_try <= value - 1e-4 * t * (grad @ step):
                break
            t /= 2.0
        lam, value = lam_try, val_try

        if np.linalg.norm(lam) > _LAMBDA_DIVERGE:
            worst = int(np.argmax(np.abs(grad)))
            raise InfeasibleTargetError(
                f"balancing target infeasible; worst constraint index {worst} "
                f"(violation {grad[worst]:.3g})", worst_constraint=worst)

    w = _tilt_weights(lam, Z)
    grad = w @ Z - target
    if np.max(np.abs(grad)) < tol:
        return w, lam, max_iter
    worst = int(np.argmax(np.abs(grad)))
    raise InfeasibleTargetError(
        f"entropy balancing did not converge; worst constraint index {worst} "
        f"(violation {grad[worst]:.3g})", worst_constraint=worst)


def _kl_to_uniform(w: np.ndarray) -> float:
    nz = w > 0
    return float(np.sum(w[nz] * np.log(w[nz] * w.size)))


def fit_entropy_balance(dm: DesignMatrix, m: int, estimand: str | None = None,
                        expansion: MomentExpansion | None = None,
                        algorithm: str | None = None) -> WeightSet:
    """Entropy-balancing weights controlling the first m moments.

    ATT: control weights are tilted to the treated sample moments and
    treated weights stay 1.  ATE: each group is tilted to the
    full-sample moments.  Weights are normalized to sum to group size.
    """
    estimand = estimand or dm.effective_estimand
    exp_ = expansion if expansion is not None else expand_moments(dm, m, estimand)
    Z = exp_.Z
    T = dm.T
    w = np.ones(dm.n)
    iterations = 0

    if estimand == "ATT":
        src = T == 0
        target = Z[T == 1].mean(axis=0)
        tilt, lam, its = _solve_named(Z[src], target, exp_.names)
        w[src] = tilt * src.sum()
        iterations = its
    else:
        target = Z.mean(axis=0)
        for g in (0, 1):
            src = T == g
            tilt, lam, its = _solve_named(Z[src], target, exp_.names)
            w[src] = tilt * src.sum()
            iterations = max(iterations, its)

    notes = []
    if exp_.dropped:
        notes.append("dropped moment columns: " + ", ".join(exp_.dropped))
    return WeightSet(
        w=w, algorithm=algorithm or f"EB{m}", estimand=estimand,
        converged=True, iterations=iterations,
        objective=_kl_to_uniform(w[T == 0] / w[T == 0].sum()),
        notes=tuple(notes))


def _solve_named(Z, target, names):
    try:
        return solve_entropy_tilt(Z, target)
    except InfeasibleTargetError as err:
        if err.worst_constraint is not None and err.worst_constraint < len(names):
            raise InfeasibleTargetError(
                f"{err} [{names[err.worst_constraint]}]",
                worst_constraint=err.worst_constraint) from None
        raise
