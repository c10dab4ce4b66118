"""Analysis session: ordered pipeline stages over one dataset.

A session walks forward through EMPTY -> DATA_LOADED -> SPEC_SET ->
TRIMMED -> WEIGHTED -> ESTIMATED -> SENSITIVITY_DONE.  Mutating an
earlier stage (new data, new spec, new trims) discards every later
artifact, so whatever is present is always derived from current
inputs.
"""

from __future__ import annotations

import time
import uuid

from .balance import BalanceReport, build_balance_report
from .data import AnalysisSpec, Dataset, DesignMatrix, encode_design
from .engines.gbm import BoostParams
from .engines.runner import run_engines
from .errors import StageError
from .outcome import EffectEstimate, fit_doubly_robust
from .overlap import apply_trims, group_densities, overlap_flags
from .sensitivity import GridSpec, SensitivityGrid, sensitivity_grid

STAGES = ("EMPTY", "DATA_LOADED", "SPEC_SET", "TRIMMED", "WEIGHTED",
          "ESTIMATED", "SENSITIVITY_DONE")


def _stage_index(stage: str) -> int:
    return STAGES.index(stage)


class Session:
    """Mutable pipeline state; one analysis at a time."""

    def __init__(self, session_id: str | None = None):
        self.id = session_id or uuid.uuid4().hex
        self.created_at = time.time()
        self.last_touched = self.created_at
        self.stage = "EMPTY"
        self.dataset: Dataset | None = None
        self.spec: AnalysisSpec | None = None
        self.design_full: DesignMatrix | None = None  # pre-trim
        self.trim_rules: tuple = ()
        self.design_trimmed: DesignMatrix | None = None
        self.trimmed_row_ids: tuple = ()
        self.weight_sets: dict = {}
        self.engine_failures: dict = {}
        self.balance_report: BalanceReport | None = None
        self.chosen_algorithm: str | None = None
        self.effect: EffectEstimate | None = None
        self.sensitivity: SensitivityGrid | None = None

    # -- stage bookkeeping -------------------------------------------------

    def touch(self):
        self.last_touched = time.time()

    def require(self, stage: str):
        if _stage_index(self.stage) < _stage_index(stage):
            raise StageError(
                f"operation requires stage {stage}; session is at {self.stage}",
                required_stage=stage)

    def _reset_to(self, stage: str):
        """Drop artifacts belonging to stages after `stage`."""
        idx = _stage_index(stage)
        if idx < _stage_index("SENSITIVITY_DONE"):
            self.sensitivity = None
        if idx < _stage_index("ESTIMATED"):
            self.effect = None
            self.chosen_algorithm = None
        if idx < _stage_index("WEIGHTED"):
            self.weight_sets = {}
            self.engine_failures = {}
            self.balance_report = None
        if idx < _stage_index("TRIMMED"):
            self.trim_rules = ()
            self.design_trimmed = None
            self.trimmed_row_ids = ()
        if idx < _stage_index("SPEC_SET"):
            self.spec = None
            self.design_full = None
        if idx < _stage_index("DATA_LOADED"):
            self.dataset = None
        self.stage = stage

    @property
    def design(self) -> DesignMatrix | None:
        """The design downstream stages operate on (post-trim when set)."""
        return self.design_trimmed if self.design_trimmed is not None else self.design_full

    # -- pipeline steps ----------------------------------------------------

    def load_data(self, dataset: Dataset):
        self._reset_to("DATA_LOADED")
        self.dataset = dataset
        self.touch()

    def set_spec(self, spec: AnalysisSpec):
        self.require("DATA_LOADED")
        spec.validate(self.dataset)
        design = encode_design(self.dataset, spec)
        self._reset_to("SPEC_SET")
        self.spec = spec
        self.design_full = design
        self.touch()

    def overlap_view(self):
        self.require("SPEC_SET")
        dm = self.design
        return {
            "densities": group_densities(dm),
            "flags": overlap_flags(dm),
            "trim_rules": self.trim_rules,
        }

    def set_trims(self, rules):
        self.require("SPEC_SET")
        rules = tuple(rules)
        if rules:
            trimmed, removed = apply_trims(self.design_full, rules)
            self._reset_to("TRIMMED")
            self.trim_rules = rules
            self.design_trimmed = trimmed
            self.trimmed_row_ids = tuple(int(i) for i in removed)
        else:
            self._reset_to("SPEC_SET")
        self.touch()

    def compute_weights(self, gbm_params: BoostParams | None = None,
                        algorithms=None):
        self.require("SPEC_SET")
        dm = self.design
        kwargs = {"strict": False, "gbm_params": gbm_params}
        if algorithms is not None:
            kwargs["algorithms"] = tuple(algorithms)
        weight_sets, failures = run_engines(dm, **kwargs)
        report = build_balance_report(dm, list(weight_sets.values()))
        self._reset_to("WEIGHTED")
        self.weight_sets = weight_sets
        self.engine_failures = failures
        self.balance_report = report
        self.touch()
        return weight_sets, failures

    def estimate(self, algorithm: str = "auto") -> EffectEstimate:
        self.require("WEIGHTED")
        if algorithm == "auto":
            algorithm = self.balance_report.recommended
        if algorithm not in self.weight_sets:
            raise KeyError(f"no weights computed for algorithm {algorithm!r}")
        effect = fit_doubly_robust(self.design, self.weight_sets[algorithm])
        self._reset_to("ESTIMATED")
        self.chosen_algorithm = algorithm
        self.effect = effect
        self.touch()
        return effect

    def run_sensitivity(self, grid: GridSpec | None = None, seed: int = 0,
                        workers: int = 1,
                        progress=None, should_stop=None) -> SensitivityGrid:
        self.require("ESTIMATED")
        result = sensitivity_grid(
            self.design, self.weight_sets[self.chosen_algorithm],
            grid=grid, master_seed=seed, workers=workers,
            progress=progress, should_stop=should_stop)
        self.sensitivity = result
        self.stage = "SENSITIVITY_DONE"
        self.touch()
        return result
