"""Balancing-weight analysis for two-group causal comparisons.

Load a dataset, encode a treatment/outcome/confounder design, fit
propensity and balancing weights under several algorithms, diagnose
covariate balance, estimate the treatment effect with a doubly-robust
weighted regression, and probe sensitivity to unobserved confounding.
"""

__version__ = "0.1.0"

from .balance import BalanceReport, build_balance_report, ess, render_percent, weighted_ks, weighted_smd
from .data import (AnalysisSpec, Dataset, DesignMatrix, ParseOptions,
                   encode_design, export_csv, load_csv, summarize)
from .engines import (ALGORITHM_IDS, BoostParams, WeightSet,
                      fit_cbps, fit_entropy_balance, fit_gbm_ps,
                      fit_logistic_ps, ps_to_weights, run_engines)
from .errors import BalanceLabError
from .example_data import TRUE_EFFECT, example_spec, generate_example_dataset
from .outcome import EffectEstimate, export_data_and_weights, fit_doubly_robust
from .overlap import TrimRule, apply_trims, density, group_densities
from .report import render_report
from .sensitivity import (GridSpec, SensitivityGrid,
                          sensitivity_grid, simulate_unobserved_confounder)
from .service import create_app
from .session import Session

__all__ = [
    "ALGORITHM_IDS", "AnalysisSpec", "BalanceLabError", "BalanceReport",
    "BoostParams", "Dataset", "DesignMatrix", "EffectEstimate", "GridSpec",
    "ParseOptions", "SensitivityGrid", "Session", "TrimRule", "TRUE_EFFECT",
    "WeightSet", "apply_trims", "build_balance_report", "create_app",
    "density", "encode_design", "ess", "example_spec", "export_csv",
    "export_data_and_weights", "fit_cbps", "fit_doubly_robust",
    "fit_entropy_balance", "fit_gbm_ps", "fit_logistic_ps",
    "generate_example_dataset", "group_densities", "load_csv",
    "ps_to_weights", "render_percent", "render_report", "run_engines",
    "sensitivity_grid", "simulate_unobserved_confounder", "summarize",
    "weighted_ks", "weighted_smd",
]
