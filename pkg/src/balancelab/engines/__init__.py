from .weights import ALGORITHM_IDS, PropensityVector, WeightSet, ps_to_weights
from .logistic import fit_logistic_ps
from .moments import MomentExpansion, expand_moments
from .cbps import fit_cbps
from .entropy import fit_entropy_balance, eb_dual_value, eb_dual_grad
from .gbm import BoostParams, fit_gbm_ps, fit_gbm_pair
from .runner import run_engines

__all__ = [
    "ALGORITHM_IDS", "PropensityVector", "WeightSet", "ps_to_weights",
    "fit_logistic_ps", "MomentExpansion", "expand_moments", "fit_cbps",
    "fit_entropy_balance", "eb_dual_value", "eb_dual_grad",
    "BoostParams", "fit_gbm_ps", "fit_gbm_pair", "run_engines",
]
