"""Synthetic two-group demo dataset with confounded assignment.

A latent severity factor drives correlated baseline measures; group
assignment follows a logit on a subset of them, so several covariates
start visibly imbalanced.  The six-month outcome is a known linear
function of baseline measures plus a fixed additive treatment effect,
which makes the generator usable as a ground-truth benchmark.
"""

from __future__ import annotations

import numpy as np

from .data import AnalysisSpec, Dataset, ParseOptions, export_csv, from_columns, numeric_column

TRUE_EFFECT = 3.0

COLUMN_NAMES = (
    "treat", "tss_0", "sfs8p_0", "eps7p_0", "ias5p_0", "dss9_0",
    "mhtrt_0_categorical", "satl_0", "sp_sm_0", "gvs", "ers21_0",
    "ada_0", "ada_6", "recov_0", "subsgrps_n_categorical",
)

# fixed marginal anchors (mean, sd) used to scale the assignment logit
_ANCHOR = {
    "tss_0": (2.10, 3.33), "eps7p_0": (0.24, 0.19), "dss9_0": (2.69, 2.55),
    "ada_0": (51.49, 33.04), "mhtrt_0_categorical": (0.27, 0.50),
    "sp_sm_0": (2.72, 3.41),
}

_ASSIGN_COEF = {
    "tss_0": 0.45, "eps7p_0": 0.40, "dss9_0": 0.35, "ada_0": -0.30,
    "mhtrt_0_categorical": 0.25, "sp_sm_0": 0.20,
}
_ASSIGN_INTERCEPT = -0.10


def _mix(rng, sev, load, size):
    return load * sev + np.sqrt(1.0 - load * load) * rng.standard_normal(size)


def _draw_pool(rng, size: int) -> dict:
    """One block of subjects; every column except treat and ada_6."""
    sev = rng.standard_normal(size)
    cols = {}

    t = _mix(rng, sev, 0.55, size)
    cols["tss_0"] = np.clip(np.round(0.3 + 5.0 * t), 0, 40)

    t = _mix(rng, sev, 0.55, size)
    cols["sfs8p_0"] = np.clip(np.round(10.3 * np.exp(0.9 * t - 0.405), 1), 0, 100)

    t = _mix(rng, sev, 0.60, size)
    cols["eps7p_0"] = np.clip(np.round(0.24 + 0.19 * t, 3), 0.0, 0.999)

    t = _mix(rng, sev, 0.50, size)
    cols["ias5p_0"] = np.clip(np.round(8.8 * np.exp(0.93 * t - 0.432), 1), 0, 90)

    t = _mix(rng, sev, 0.60, size)
    cols["dss9_0"] = np.clip(np.round(2.55 + 2.55 * t), 0, 9)

    u = _mix(rng, sev, 0.45, size)
    cols["mhtrt_0_categorical"] = ((u > 0.739).astype(float)
                                   + (u > 1.751).astype(float))

    active = _mix(rng, sev, 0.40, size) > 0.8416
    mag = np.exp(2.80 + 0.956 * rng.standard_normal(size))
    cols["satl_0"] = np.round(np.where(active, np.clip(mag, 0, 365), 0.0))

    t = _mix(rng, sev, 0.45, size)
    cols["sp_sm_0"] = np.clip(np.round(2.75 * np.exp(0.95 * t - 0.45)), 0, 30)

    t = _mix(rng, sev, 0.40, size)
    cols["gvs"] = np.clip(np.round(2.9 * np.exp(0.85 * t - 0.36), 1), 0, 20)

    t = _mix(rng, sev, 0.40, size)
    cols["ers21_0"] = np.clip(np.round(35.88 + 8.58 * t, 1), 0, 63)

    t = _mix(rng, sev, 0.50, size)
    cols["ada_0"] = np.clip(np.round(51.5 + 33.0 * t, 1), 0, 100)

    r = _mix(rng, sev, -0.30, size)
    cols["recov_0"] = (r > 0.706).astype(float)

    v = _mix(rng, sev, 0.35, size)
    cols["subsgrps_n_categorical"] = (1.0 + (v > 0.385).astype(float)
                                      + (v > 1.645).astype(float))
    return cols


def _assign(rng, cols: dict) -> np.ndarray:
    eta = np.full(len(cols["tss_0"]), _ASSIGN_INTERCEPT)
    for name, coef in _ASSIGN_COEF.items():
        m, s = _ANCHOR[name]
        eta += coef * (cols[name] - m) / s
    p = 1.0 / (1.0 + np.exp(-eta))
    return (rng.random(len(eta)) < p).astype(float)


def _outcome(rng, cols: dict, treat: np.ndarray) -> np.ndarray:
    y = (22.0
         + 0.60 * cols["ada_0"]
         + 6.0 * cols["eps7p_0"]
         - 1.1 * cols["dss9_0"]
         + 0.35 * cols["ers21_0"]
         - 2.5 * cols["mhtrt_0_categorical"]
         + 4.0 * cols["recov_0"]
         + TRUE_EFFECT * treat
         + 21.0 * rng.standard_normal(len(treat)))
    return np.round(y, 2)


def generate_example_dataset(seed: int = 1, n_per_group: int = 2000) -> Dataset:
    """Deterministic demo dataset with n_per_group rows in each group.

    Subjects are drawn until both groups fill, then the first
    n_per_group of each (in draw order) are kept, preserving draw
    order, so the group split is exactly 50/50.
    """
    if n_per_group < 50:
        raise ValueError("n_per_group must be at least 50")
    rng = np.random.default_rng(seed)
    cols: dict = {}
    treat = np.empty(0)
    need = 2 * n_per_group
    while True:
        block = _draw_pool(rng, int(need * 1.4) + 64)
        t_block = _assign(rng, block)
        if not cols:
            cols = block
            treat = t_block
        else:
            cols = {k: np.concatenate([cols[k], block[k]]) for k in cols}
            treat = np.concatenate([treat, t_block])
        if (treat == 1).sum() >= n_per_group and (treat == 0).sum() >= n_per_group:
            break
        need = 2 * n_per_group  # draw another block

    keep_t = np.flatnonzero(treat == 1)[:n_per_group]
    keep_c = np.flatnonzero(treat == 0)[:n_per_group]
    keep = np.sort(np.concatenate([keep_t, keep_c]))
    cols = {k: v[keep] for k, v in cols.items()}
    treat = treat[keep]
    ada_6 = _outcome(rng, cols, treat)

    by_name = dict(cols)
    by_name["treat"] = treat
    by_name["ada_6"] = ada_6
    return from_columns(numeric_column(n, by_name[n]) for n in COLUMN_NAMES)


def generate_example_csv(seed: int = 1, n_per_group: int = 2000) -> bytes:
    return export_csv(generate_example_dataset(seed, n_per_group),
                      ParseOptions())


def example_spec(estimand: str = "ATT") -> AnalysisSpec:
    """The canonical model set-up for the demo dataset."""
    return AnalysisSpec(
        treatment_var="treat", control_label="0", treatment_label="1",
        outcome_var="ada_6",
        numeric_confounders=(
            "tss_0", "sfs8p_0", "eps7p_0", "ias5p_0", "dss9_0", "satl_0",
            "sp_sm_0", "gvs", "ers21_0", "ada_0", "recov_0"),
        categorical_confounders=(
            ("mhtrt_0_categorical", "0"),
            ("subsgrps_n_categorical", "1")),
        estimand=estimand)
