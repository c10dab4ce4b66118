"""Omitted-confounder sensitivity analysis.

For a grid of hypothetical confounders, parameterized by their signed
SMD with treatment (es) and absolute correlation with the outcome
residuals (rho), draw synthetic confounders with those properties,
refit weights and the outcome model with the confounder included, and
record how the effect estimate and its p-value move.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .balance import smd_denominator
from .data import DesignMatrix
from .engines.entropy import fit_entropy_balance
from .engines.logistic import fit_logistic_ps
from .engines.weights import WeightSet, ps_to_weights
from .errors import BalanceLabError, InfeasibleCellError, JobCancelled
from .outcome import fit_doubly_robust, weighted_least_squares

MAX_RHO = 0.95
TARGET_TOL = 0.01
_FD_H = 1e-5


@dataclass(frozen=True)
class GridSpec:
    es_axis: tuple = tuple(np.linspace(-0.6, 0.6, 13).round(12))
    rho_axis: tuple = tuple(np.linspace(0.0, 0.6, 13).round(12))
    draws: int = 20


@dataclass(frozen=True)
class SensitivityGrid:
    es_axis: tuple
    rho_axis: tuple
    effect_surface: np.ndarray  # shape (len(rho_axis), len(es_axis))
    pvalue_surface: np.ndarray
    missing: np.ndarray  # bool, same shape; True = no value
    observed_points: tuple  # (name, es, rho)
    baseline: tuple  # (effect, p)
    draws_per_cell: int


def signed_weighted_smd(x: np.ndarray, T: np.ndarray, w: np.ndarray,
                        estimand: str) -> float:
    """Like the balance metric but keeping the sign of mean1 - mean0."""
    w1 = w[T == 1]
    w0 = w[T == 0]
    m1 = float(np.dot(w1, x[T == 1]) / w1.sum())
    m0 = float(np.dot(w0, x[T == 0]) / w0.sum())
    denom = smd_denominator(x, T, estimand)
    if denom == 0.0:
        return 0.0
    return (m1 - m0) / denom


def _standardize(v: np.ndarray) -> np.ndarray:
    s = np.std(v, ddof=1)
    if s == 0:
        return np.zeros_like(v)
    return (v - v.mean()) / s


def _corr(a: np.ndarray, b: np.ndarray) -> float:
    sa = np.std(a)
    sb = np.std(b)
    if sa == 0 or sb == 0:
        return 0.0
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def simulate_unobserved_confounder(dm: DesignMatrix, ws: WeightSet,
                                   es: float, rho: float, seed,
                                   resid: np.ndarray | None = None) -> np.ndarray:
    """Draw U with weighted SMD ~ es and residual correlation ~ rho.

    U = a*T_std + b*e_std + c*noise; (a, b) start at the orthogonal
    moment solution and are refined by Gauss-Newton steps against the
    realized (SMD, correlation) pair, within TARGET_TOL.
    """
    if abs(rho) >= MAX_RHO:
        raise InfeasibleCellError(f"|rho| must be below {MAX_RHO}")
    estimand = ws.estimand
    T = dm.T
    if resid is None:
        resid = _baseline_residuals(dm, ws)
    t_std = _standardize(T.astype(float))
    e_std = _standardize(resid)
    s_t = float(np.std(T, ddof=1))

    # orthogonal-component solution: group mean gap of t_std is 1/s_t
    a0 = es * s_t
    b0 = rho
    rem = 1.0 - a0 * a0 - b0 * b0
    if rem < 0:
        raise InfeasibleCellError(
            f"(es={es:g}, rho={rho:g}) exceeds the unit variance budget")
    c = float(np.sqrt(rem))

    rng = np.random.default_rng(seed)
    zeta = rng.standard_normal(dm.n)

    def build(a, b):
        return a * t_std + b * e_std + c * zeta

    def realized(a, b):
        U = build(a, b)
        return np.array([
            signed_weighted_smd(U, T, ws.w, estimand) - es,
            _corr(U, resid) - rho,
        ])

    a, b = a0, b0
    for _ in range(3):
        r = realized(a, b)
        if np.max(np.abs(r)) <= TARGET_TOL:
            break
        J = np.empty((2, 2))
        J[:, 0] = (realized(a + _FD_H, b) - realized(a - _FD_H, b)) / (2 * _FD_H)
        J[:, 1] = (realized(a, b + _FD_H) - realized(a, b - _FD_H)) / (2 * _FD_H)
        try:
            step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            break
        a, b = a - step[0], b - step[1]
    return build(a, b)


def _baseline_residuals(dm: DesignMatrix, ws: WeightSet) -> np.ndarray:
    A = np.column_stack([np.ones(dm.n), dm.T.astype(float), dm.X])
    names = ["(Intercept)", dm.treatment_name] + list(dm.column_names)
    beta, _ = weighted_least_squares(A, dm.Y, ws.w, names)
    return dm.Y - A @ beta


def _refit_family(aid: str):
    if aid.startswith("EB"):
        m = int(aid[2:])
        return ("EB", m)
    return ("LR", None)


def _cell_estimates(dm: DesignMatrix, ws: WeightSet, resid: np.ndarray,
                    es: float, rho: float, seeds, family) -> tuple:
    effects = []
    pvals = []
    for seed in seeds:
        U = simulate_unobserved_confounder(dm, ws, es, rho, seed, resid=resid)
        dm_u = dm.with_extra_column("(U)", U)
        if family[0] == "EB":
            ws_u = fit_entropy_balance(dm_u, family[1], ws.estimand,
                                       algorithm=ws.algorithm)
        else:
            pv = fit_logistic_ps(dm_u)
            ws_u = ps_to_weights(pv, dm_u.T, ws.estimand)
        est = fit_doubly_robust(dm_u, ws_u)
        effects.append(est.effect)
        pvals.append(est.row(dm.treatment_name).p)
    return float(np.mean(effects)), float(np.mean(pvals))


def observed_confounder_points(dm: DesignMatrix, resid: np.ndarray,
                               estimand: str) -> tuple:
    """(name, signed unweighted SMD, |corr with residuals|) per column."""
    ones = np.ones(dm.n)
    pts = []
    for j, name in enumerate(dm.column_names):
        x = dm.X[:, j]
        es = signed_weighted_smd(x, dm.T, ones, estimand)
        rho = abs(_corr(x, resid))
        pts.append((name, es, rho))
    return tuple(pts)


def sensitivity_grid(dm: DesignMatrix, ws: WeightSet,
                     grid: GridSpec | None = None,
                     master_seed: int = 0, workers: int = 1,
                     progress=None, should_stop=None) -> SensitivityGrid:
    """Dense (rho x es) surfaces of mean refitted effect and p-value.

    Per-cell, per-draw seeds derive from (master_seed, es index, rho
    index, draw index), so any execution order - including the
    thread-pooled one when workers > 1 - gives identical output.
    Infeasible or failing cells are masked missing; the run continues.
    """
    grid = grid or GridSpec()
    baseline = fit_doubly_robust(dm, ws)
    resid = _baseline_residuals(dm, ws)
    family = _refit_family(ws.algorithm)

    n_rho = len(grid.rho_axis)
    n_es = len(grid.es_axis)
    effect = np.full((n_rho, n_es), np.nan)
    pval = np.full((n_rho, n_es), np.nan)
    missing = np.ones((n_rho, n_es), dtype=bool)
    cells = [(irho, ies, rho, es)
             for irho, rho in enumerate(grid.rho_axis)
             for ies, es in enumerate(grid.es_axis)]

    def run_cell(cell):
        irho, ies, rho, es = cell
        seeds = [np.random.SeedSequence([master_seed, ies, irho, d])
                 for d in range(grid.draws)]
        try:
            e, p = _cell_estimates(dm, ws, resid, es, rho, seeds, family)
            return irho, ies, e, p
        except (InfeasibleCellError, BalanceLabError):
            return irho, ies, None, None

    done = 0
    if workers <= 1:
        results = []
        for cell in cells:
            if should_stop is not None and should_stop():
                raise JobCancelled("sensitivity grid cancelled")
            results.append(run_cell(cell))
            done += 1
            if progress is not None:
                progress(done, len(cells))
    else:
        from concurrent.futures import ThreadPoolExecutor, as_completed
        results = []
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_cell, c) for c in cells]
            try:
                for fut in as_completed(futures):
                    if should_stop is not None and should_stop():
                        raise JobCancelled("sensitivity grid cancelled")
                    results.append(fut.result())
                    done += 1
                    if progress is not None:
                        progress(done, len(cells))
            except JobCancelled:
                for fut in futures:
                    fut.cancel()
                raise

    for irho, ies, e, p in results:
        if e is not None:
            effect[irho, ies] = e
            pval[irho, ies] = p
            missing[irho, ies] = False

    points = observed_confounder_points(dm, resid, ws.estimand)
    brow = baseline.row(dm.treatment_name)
    return SensitivityGrid(
        es_axis=tuple(grid.es_axis), rho_axis=tuple(grid.rho_axis),
        effect_surface=effect, pvalue_surface=pval, missing=missing,
        observed_points=points, baseline=(baseline.effect, brow.p),
        draws_per_cell=grid.draws)
