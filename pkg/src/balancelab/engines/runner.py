"""Run every weighting algorithm over one design matrix."""

from __future__ import annotations

from dataclasses import replace

from ..data import DesignMatrix
from ..errors import InfeasibleTargetError
from .cbps import fit_cbps
from .entropy import fit_entropy_balance
from .gbm import BoostParams, fit_gbm_pair
from .logistic import fit_logistic_ps
from .moments import expand_moments
from .weights import ALGORITHM_IDS, WeightSet, ps_to_weights


def run_engines(dm: DesignMatrix, estimand: str | None = None,
                gbm_params: BoostParams | None = None,
                algorithms: tuple[str, ...] = ALGORITHM_IDS,
                strict: bool = True):
    """Fit the requested algorithms and collect their weight sets.

    Returns (weight_sets, failures): an id-keyed dict in canonical
    order, plus a dict of error messages for algorithms that could not
    produce weights (only when strict is False; otherwise the first
    failure propagates).
    """
    estimand = estimand or dm.effective_estimand
    weight_sets: dict[str, WeightSet] = {}
    failures: dict[str, str] = {}

    expansions = {}
    for m in (1, 2, 3):
        if f"CBPS{m}" in algorithms or f"EB{m}" in algorithms:
            expansions[m] = expand_moments(dm, m, estimand)

    if "LR" in algorithms:
        pv = fit_logistic_ps(dm)
        weight_sets["LR"] = ps_to_weights(pv, dm.T, estimand)

    for m in (1, 2, 3):
        aid = f"CBPS{m}"
        if aid in algorithms:
            weight_sets[aid] = fit_cbps(dm, m, estimand,
                                        expansion=expansions[m])

    if "GBM_ES" in algorithms or "GBM_KS" in algorithms:
        pair = fit_gbm_pair(dm, estimand, gbm_params)
        for aid in ("GBM_ES", "GBM_KS"):
            if aid in algorithms:
                pv = pair[aid]
                ws = ps_to_weights(pv, dm.T, estimand)
                weight_sets[aid] = replace(ws, chosen_gbm_trees=pv.iterations)

    for m in (1, 2, 3):
        aid = f"EB{m}"
        if aid in algorithms:
            try:
                weight_sets[aid] = fit_entropy_balance(
                    dm, m, estimand, expansion=expansions[m])
            except InfeasibleTargetError as err:
                if strict:
                    raise
                failures[aid] = str(err)

    ordered = {aid: weight_sets[aid] for aid in ALGORITHM_IDS
               if aid in weight_sets}
    return ordered, failures
