"""Headless batch runner: full pipeline from a JSON config file.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .data import AnalysisSpec, ParseOptions, load_csv
from .engines.gbm import BoostParams
from .engines.weights import ALGORITHM_IDS
from .errors import (BalanceLabError, CollinearityError, CsvParseError,
                     DegenerateColumnError, EmptyDataError, EmptyGroupError,
                     InfeasibleTargetError, MultiGroupError, SchemaError,
                     SpecValidationError)
from .example_data import example_spec, generate_example_dataset
from .outcome import export_data_and_weights
from .overlap import TrimRule
from .report import render_report
from .sensitivity import GridSpec
from .session import Session

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

_DATA_ERRORS = (CsvParseError, EmptyDataError, SchemaError, MultiGroupError,
                DegenerateColumnError, EmptyGroupError)
_NUMERIC_ERRORS = (CollinearityError, InfeasibleTargetError,
                   np.linalg.LinAlgError)


class ConfigError(Exception):
    pass


def _require(cfg: dict, field: str, path: str = ""):
    if field not in cfg:
        where = f" in {path}" if path else ""
        raise ConfigError(f"missing required field {field!r}{where}")
    return cfg[field]


def load_config(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return cfg


def _build_spec(cfg: dict) -> AnalysisSpec:
    if "spec" not in cfg:
        if "example" in cfg:
            return example_spec(cfg.get("estimand", "ATT"))
        raise ConfigError("missing required field 'spec'")
    s = cfg["spec"]
    cats = []
    for c in s.get("categorical_confounders", ()):
        cats.append((_require(c, "name", "categorical_confounders"),
                     _require(c, "reference", "categorical_confounders")))
    return AnalysisSpec(
        treatment_var=_require(s, "treatment_var", "spec"),
        control_label=_require(s, "control_label", "spec"),
        treatment_label=_require(s, "treatment_label", "spec"),
        outcome_var=_require(s, "outcome_var", "spec"),
        numeric_confounders=tuple(s.get("numeric_confounders", ())),
        categorical_confounders=tuple(cats),
        estimand=s.get("estimand", "ATE"))


def _load_input(cfg: dict, seed_override):
    if "example" in cfg and "input" in cfg:
        raise ConfigError("config provides both 'input' and 'example'")
    if "example" in cfg:
        ex = cfg["example"]
        seed = int(ex.get("seed", 1)) if seed_override is None else seed_override
        n = int(ex.get("n_per_group", 2000))
        data = generate_example_dataset(seed, n)
        return data, {"example": {"seed": seed, "n_per_group": n}}
    if "input" in cfg:
        inp = cfg["input"]
        path = Path(_require(inp, "path", "input"))
        options = ParseOptions(
            header=bool(inp.get("header", True)),
            separator=inp.get("separator", "comma"),
            quote=inp.get("quote", "double"))
        try:
            raw = path.read_bytes()
        except OSError as err:
            raise ConfigError(f"cannot read input {path}: {err}") from None
        data = load_csv(raw, options)
        sha = hashlib.sha256(raw).hexdigest()
        return data, {"path": str(path), "sha256": sha}
    raise ConfigError("config needs either 'input' or 'example'")


def _grid_spec(sens: dict) -> GridSpec:
    kwargs = {}
    if "es_axis" in sens:
        kwargs["es_axis"] = tuple(float(v) for v in sens["es_axis"])
    if "rho_axis" in sens:
        kwargs["rho_axis"] = tuple(float(v) for v in sens["rho_axis"])
    if "draws" in sens:
        kwargs["draws"] = int(sens["draws"])
    return GridSpec(**kwargs)


def run(cfg: dict, output_dir: Path, seed_override=None, workers: int = 1,
        quiet: bool = False) -> int:
    def say(msg):
        if not quiet:
            print(msg)

    algorithms = tuple(cfg.get("algorithms", ALGORITHM_IDS))
    unknown = [a for a in algorithms if a not in ALGORITHM_IDS]
    if unknown:
        raise ConfigError(f"unknown algorithm ids: {', '.join(unknown)}")
    choose = cfg.get("choose", "auto")
    if choose != "auto" and choose not in algorithms:
        raise ConfigError(
            f"'choose' must be \"auto\" or one of the selected algorithms, "
            f"got {choose!r}")

    gbm_cfg = cfg.get("gbm", {})
    gbm_params = BoostParams(
        max_trees=int(gbm_cfg.get("max_trees", BoostParams.max_trees)),
        shrinkage=float(gbm_cfg.get("shrinkage", BoostParams.shrinkage)),
        depth=int(gbm_cfg.get("depth", BoostParams.depth)),
        eval_stride=int(gbm_cfg.get("eval_stride", BoostParams.eval_stride)),
        min_leaf=int(gbm_cfg.get("min_leaf", BoostParams.min_leaf)))

    data, input_desc = _load_input(cfg, seed_override)
    spec = _build_spec(cfg)

    session = Session()
    session.load_data(data)
    session.set_spec(spec)
    say(f"loaded {data.n_rows} rows; design has {session.design.n} rows "
        f"after complete-case filtering")

    rules = [TrimRule(confounder=_require(r, "confounder", "trims"),
                      lower_cut=r.get("lower_cut"),
                      upper_cut=r.get("upper_cut"))
             for r in cfg.get("trims", ())]
    if rules:
        session.set_trims(rules)
        say(f"trimming removed {len(session.trimmed_row_ids)} rows")

    say(f"fitting weights: {', '.join(algorithms)}")
    weight_sets, failures = session.compute_weights(
        gbm_params=gbm_params, algorithms=algorithms)
    for aid, msg in failures.items():
        say(f"  {aid}: no weights ({msg})")
    if not weight_sets:
        raise InfeasibleTargetError("no algorithm produced weights")

    effect = session.estimate(choose)
    say(f"estimated effect ({effect.algorithm_used}): {effect.effect:.4f}")

    sens_cfg = cfg.get("sensitivity", {})
    sens_seed = None
    if sens_cfg.get("enabled", False):
        sens_seed = int(sens_cfg.get("seed", 0)) if seed_override is None \
            else seed_override
        say("running sensitivity grid")
        session.run_sensitivity(grid=_grid_spec(sens_cfg), seed=sens_seed,
                                workers=workers)

    output_dir.mkdir(parents=True, exist_ok=True)
    (output_dir / "report.html").write_bytes(render_report(session))
    (output_dir / "data_and_weights.csv").write_bytes(
        export_data_and_weights(session.dataset, session.design,
                                session.weight_sets, "csv"))

    br = session.balance_report
    balance_doc = {
        "row_names": list(br.row_names),
        "columns": list(br.columns),
        "smd": _matrix(br.smd),
        "ks": _matrix(br.ks),
        "mean_smd": _vector(br.mean_smd),
        "max_smd": _vector(br.max_smd),
        "mean_ks": _vector(br.mean_ks),
        "max_ks": _vector(br.max_ks),
        "ess": {k: {"total": e.total, "percent": e.percent,
                    "control": e.per_group[0], "treated": e.per_group[1]}
                for k, e in br.ess.items()},
        "recommended": br.recommended,
        "rationale": br.rationale,
    }
    _write_json(output_dir / "balance.json", balance_doc)
    _write_json(output_dir / "effect.json", {
        "effect": effect.effect,
        "estimand": effect.estimand,
        "algorithm_used": effect.algorithm_used,
        "n_used": effect.n_used,
        "rows": [{"term": r.term, "estimate": r.estimate, "se": r.se,
                  "t": _finite(r.t), "p": r.p} for r in effect.rows],
    })
    if session.sensitivity is not None:
        g = session.sensitivity
        _write_json(output_dir / "sensitivity.json", {
            "es_axis": list(g.es_axis),
            "rho_axis": list(g.rho_axis),
            "effect_surface": _matrix(g.effect_surface),
            "pvalue_surface": _matrix(g.pvalue_surface),
            "missing": [[bool(v) for v in row] for row in g.missing],
            "observed_points": [
                {"name": n, "es": e, "rho": r}
                for n, e, r in g.observed_points],
            "baseline": {"effect": g.baseline[0], "p": g.baseline[1]},
            "draws_per_cell": g.draws_per_cell,
        })

    manifest = {
        "input": input_desc,
        "spec": {
            "treatment_var": spec.treatment_var,
            "outcome_var": spec.outcome_var,
            "estimand": spec.estimand,
            "numeric_confounders": list(spec.numeric_confounders),
            "categorical_confounders": [
                {"name": n, "reference": r}
                for n, r in spec.categorical_confounders],
        },
        "algorithms": list(weight_sets),
        "failures": failures,
        "recommended": br.recommended,
        "chosen": effect.algorithm_used,
        "effect": effect.effect,
        "seeds": {"sensitivity": sens_seed},
        "versions": {"balancelab": __version__,
                     "numpy": np.__version__, "scipy": scipy.__version__},
    }
    _write_json(output_dir / "manifest.json", manifest)
    say(f"artifacts written to {output_dir}")
    return EXIT_OK


def _finite(v: float):
    return float(v) if np.isfinite(v) else None


def _vector(v) -> list:
    return [_finite(x) for x in v]


def _matrix(m) -> list:
    return [_vector(row) for row in m]


def _write_json(path: Path, doc: dict):
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="balancelab",
        description="Batch weighting analysis from a JSON config file.")
    parser.add_argument("--config", required=True, help="path to JSON config")
    parser.add_argument("--output", default=None,
                        help="output directory (overrides config output_dir)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override example and sensitivity seeds")
    parser.add_argument("--workers", type=int, default=1,
                        help="thread pool size for sensitivity cells")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress output")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(Path(args.config))
        out_dir = Path(args.output or cfg.get("output_dir", "balancelab_out"))
        return run(cfg, out_dir, seed_override=args.seed,
                   workers=args.workers, quiet=args.quiet)
    except (ConfigError, SpecValidationError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except _NUMERIC_ERRORS as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except KeyError as err:
        print(f"numeric failure: no weights for {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except BalanceLabError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
