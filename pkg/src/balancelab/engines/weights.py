"""Weight-set types and the inverse-probability weight construction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Column headers used verbatim in reports, exports, API and UI.
ALGORITHM_IDS = (
    "LR", "CBPS1", "CBPS2", "CBPS3", "GBM_ES", "GBM_KS", "EB1", "EB2", "EB3")

# Propensity clipping bounds; keeps IPW weights finite under separation.
P_CLIP = 1e-6


@dataclass(frozen=True)
class PropensityVector:
    """Estimated treatment probabilities, clipped strictly inside (0,1)."""

    p: np.ndarray
    source: str
    converged: bool = True
    iterations: int = 0
    notes: tuple = ()

    def __post_init__(self):
        clipped = np.clip(np.asarray(self.p, dtype=float), P_CLIP, 1 - P_CLIP)
        object.__setattr__(self, "p", clipped)


@dataclass(frozen=True)
class WeightSet:
    """Per-row weights plus provenance for one algorithm configuration."""

    w: np.ndarray
    algorithm: str
    estimand: str  # ATE | ATT
    converged: bool = True
    iterations: int = 0
    objective: float = float("nan")
    chosen_gbm_trees: int | None = None
    notes: tuple = ()

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if (w < 0).any():
            raise ValueError("weights must be non-negative")
        object.__setattr__(self, "w", w)

    def diagnostics(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "estimand": self.estimand,
            "converged": self.converged,
            "iterations": self.iterations,
            "objective": None if np.isnan(self.objective) else self.objective,
            "chosen_gbm_trees": self.chosen_gbm_trees,
            "notes": list(self.notes),
        }


def ps_to_weights(pv: PropensityVector, T: np.ndarray, estimand: str) -> WeightSet:
    """Standard IPW construction.

    ATE: w = T/p + (1-T)/(1-p).  ATT: w = T + (1-T) * p/(1-p), so every
    treated row has weight exactly 1.
    """
    p = pv.p
    T = np.asarray(T)
    if estimand == "ATE":
        w = T / p + (1 - T) / (1 - p)
    elif estimand == "ATT":
        w = T + (1 - T) * p / (1 - p)
    else:
        raise ValueError(f"unsupported estimand {estimand!r}")
    return WeightSet(
        w=w, algorithm=pv.source, estimand=estimand,
        converged=pv.converged, iterations=pv.iterations, notes=pv.notes)
