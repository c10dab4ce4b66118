"""HTTP service exposing the analysis pipeline, one session per client.

All endpoints live under /v1.  Sessions are in-memory; mutating calls
on one session are serialized by a per-session lock.  The sensitivity
grid runs as a background job with polled progress and cooperative
cancellation.
"""

from __future__ import annotations

import os
import threading

import numpy as np
from fastapi import FastAPI, File, Form, Request, Response, UploadFile
from fastapi.responses import JSONResponse

from .balance import BalanceReport, render_percent
from .data import (AnalysisSpec, ParseOptions, head_rows, load_csv, summarize)
from .engines.gbm import BoostParams
from .errors import (BalanceLabError, CollinearityError, CsvParseError,
                     EmptyDataError, EmptyGroupError, JobCancelled,
                     MultiGroupError, SchemaError, SpecValidationError,
                     StageError)
from .example_data import generate_example_dataset
from .outcome import EffectEstimate, export_data_and_weights
from .overlap import TrimRule
from .report import model_formulas, render_report
from .sensitivity import GridSpec, SensitivityGrid, sensitivity_grid
from .session import Session

DEFAULT_UPLOAD_CAP = 50 * 1024 * 1024


def _upload_cap() -> int:
    return int(os.environ.get("BALANCELAB_UPLOAD_CAP", DEFAULT_UPLOAD_CAP))


# -- JSON views -------------------------------------------------------------

def _data_view(session: Session, preview_rows: int) -> dict:
    data = session.dataset
    return {
        "n_rows": data.n_rows,
        "columns": data.column_names,
        "summary": summarize(data),
        "head": head_rows(data, preview_rows),
        "stage": session.stage,
    }


def _balance_view(report: BalanceReport, failures: dict) -> dict:
    def clean(mat):
        return [[None if not np.isfinite(v) else float(v) for v in row]
                for row in np.atleast_2d(mat)]

    return {
        "row_names": list(report.row_names),
        "columns": list(report.columns),
        "smd": clean(report.smd),
        "ks": clean(report.ks),
        "mean_smd": clean(report.mean_smd)[0],
        "max_smd": clean(report.max_smd)[0],
        "mean_ks": clean(report.mean_ks)[0],
        "max_ks": clean(report.max_ks)[0],
        "ess": {
            name: {
                "total": e.total,
                "percent": e.percent,
                "percent_rendered": render_percent(e.percent),
                "control": e.per_group[0],
                "treated": e.per_group[1],
            } for name, e in report.ess.items()
        },
        "recommended": report.recommended,
        "rationale": report.rationale,
        "estimand": report.estimand,
        "n": report.n,
        "failures": failures,
    }


def _effect_view(est: EffectEstimate) -> dict:
    return {
        "rows": [
            {"term": r.term, "estimate": r.estimate, "se": r.se,
             "t": None if not np.isfinite(r.t) else r.t, "p": r.p}
            for r in est.rows
        ],
        "effect": est.effect,
        "algorithm_used": est.algorithm_used,
        "estimand": est.estimand,
        "n_used": est.n_used,
    }


def _grid_view(grid: SensitivityGrid) -> dict:
    def mat(m):
        return [[None if not np.isfinite(v) else float(v) for v in row]
                for row in m]

    # level values for client-side contour tracing; clients draw the
    # lines but never pick the numbers themselves
    finite = grid.effect_surface[np.isfinite(grid.effect_surface)]
    if finite.size:
        effect_levels = sorted({
            float(q) for q in np.quantile(finite, (0.1, 0.3, 0.5, 0.7, 0.9))})
    else:
        effect_levels = []

    return {
        "es_axis": [float(v) for v in grid.es_axis],
        "rho_axis": [float(v) for v in grid.rho_axis],
        "effect_surface": mat(grid.effect_surface),
        "pvalue_surface": mat(grid.pvalue_surface),
        "missing": [[bool(v) for v in row] for row in grid.missing],
        "observed_points": [
            {"name": n, "es": float(e), "rho": float(r)}
            for n, e, r in grid.observed_points
        ],
        "baseline": {"effect": grid.baseline[0], "p": grid.baseline[1]},
        "draws_per_cell": grid.draws_per_cell,
        "effect_levels": effect_levels,
        "p_levels": [0.05, 0.01],
    }


def _overlap_view(session: Session) -> dict:
    view = session.overlap_view()
    curves = [
        {"confounder": c.confounder, "group": c.group,
         "grid": [float(v) for v in c.grid],
         "density": [float(v) for v in c.density],
         "bandwidth": c.bandwidth}
        for c in view["densities"]
    ]
    dm = session.design
    groups = {}
    for g, label in ((0, "control"), (1, "treated")):
        mask = dm.T == g
        groups[label] = {
            "n": int(mask.sum()),
            "means": {name: float(dm.X[mask, j].mean())
                      for j, name in enumerate(dm.column_names)},
        }
    return {
        "curves": curves,
        "flags": view["flags"],
        "trim_rules": [
            {"confounder": r.confounder, "lower_cut": r.lower_cut,
             "upper_cut": r.upper_cut} for r in view["trim_rules"]],
        "groups": groups,
        "n": dm.n,
        "stage": session.stage,
    }


# -- app --------------------------------------------------------------------

class _Job:
    def __init__(self):
        self.status = "running"  # running | done | cancelled | failed
        self.done = 0
        self.total = 0
        self.error = None
        self.stop = threading.Event()
        self.thread = None


def create_app() -> FastAPI:
    app = FastAPI(title="balancelab", version="1")
    sessions: dict[str, Session] = {}
    locks: dict[str, threading.Lock] = {}
    jobs: dict[str, _Job] = {}
    store_lock = threading.Lock()

    def get_session(sid: str) -> Session:
        s = sessions.get(sid)
        if s is None:
            raise _NotFound(f"no session {sid!r}")
        return s

    class _NotFound(Exception):
        def __init__(self, message):
            self.message = message

    @app.exception_handler(_NotFound)
    async def _nf_handler(request: Request, exc: _NotFound):
        return JSONResponse(status_code=404, content={"error": exc.message})

    @app.exception_handler(StageError)
    async def _stage_handler(request: Request, exc: StageError):
        return JSONResponse(status_code=409, content={
            "error": str(exc), "required_stage": exc.required_stage})

    @app.exception_handler(SpecValidationError)
    async def _spec_handler(request: Request, exc: SpecValidationError):
        return JSONResponse(status_code=422, content={
            "error": "invalid analysis spec",
            "errors": [{"field": f, "message": m} for f, m in exc.errors]})

    @app.exception_handler(BalanceLabError)
    async def _domain_handler(request: Request, exc: BalanceLabError):
        codes = {
            CsvParseError: 422, EmptyDataError: 422, SchemaError: 422,
            MultiGroupError: 422, EmptyGroupError: 422,
            CollinearityError: 422,
        }
        status = codes.get(type(exc), 422)
        return JSONResponse(status_code=status, content={"error": str(exc)})

    def lock_for(sid: str) -> threading.Lock:
        with store_lock:
            return locks[sid]

    @app.post("/v1/sessions", status_code=201)
    def create_session():
        s = Session()
        with store_lock:
            sessions[s.id] = s
            locks[s.id] = threading.Lock()
        return {"id": s.id, "stage": s.stage}

    @app.get("/v1/sessions/{sid}")
    def session_info(sid: str):
        s = get_session(sid)
        return {
            "id": s.id, "stage": s.stage,
            "chosen_algorithm": s.chosen_algorithm,
            "algorithms": list(s.weight_sets),
            "created_at": s.created_at, "last_touched": s.last_touched,
        }

    @app.post("/v1/sessions/{sid}/data")
    async def upload_data(sid: str, file: UploadFile = File(...),
                          header: bool = Form(True),
                          separator: str = Form("comma"),
                          quote: str = Form("double"),
                          preview_rows: int = Form(5)):
        s = get_session(sid)
        raw = await file.read()
        if len(raw) > _upload_cap():
            return JSONResponse(status_code=413, content={
                "error": f"upload exceeds cap of {_upload_cap()} bytes"})
        options = ParseOptions(header=header, separator=separator, quote=quote)
        data = load_csv(raw, options)
        with lock_for(sid):
            _forbid_running_job(jobs.get(sid))
            s.load_data(data)
        return _data_view(s, preview_rows)

    @app.post("/v1/sessions/{sid}/data/example")
    def example_data(sid: str, body: dict | None = None):
        s = get_session(sid)
        body = body or {}
        seed = int(body.get("seed", 1))
        n_per_group = int(body.get("n_per_group", 2000))
        preview_rows = int(body.get("preview_rows", 5))
        data = generate_example_dataset(seed, n_per_group)
        with lock_for(sid):
            _forbid_running_job(jobs.get(sid))
            s.load_data(data)
        return _data_view(s, preview_rows)

    @app.put("/v1/sessions/{sid}/spec")
    def set_spec(sid: str, body: dict):
        s = get_session(sid)
        cats = []
        for c in body.get("categorical_confounders", ()):
            if not isinstance(c, dict) or "name" not in c or "reference" not in c:
                raise SpecValidationError([
                    ("categorical_confounders",
                     "entries must be objects with 'name' and 'reference'")])
            cats.append((c["name"], c["reference"]))
        spec = AnalysisSpec(
            treatment_var=body.get("treatment_var", ""),
            control_label=body.get("control_label", ""),
            treatment_label=body.get("treatment_label", ""),
            outcome_var=body.get("outcome_var", ""),
            numeric_confounders=tuple(body.get("numeric_confounders", ())),
            categorical_confounders=tuple(cats),
            estimand=body.get("estimand", "ATE"))
        with lock_for(sid):
            _forbid_running_job(jobs.get(sid))
            s.set_spec(spec)
        out = model_formulas(spec)
        out.update({
            "stage": s.stage,
            "design_columns": list(s.design.column_names),
            "n": s.design.n,
            "dropped_rows": s.design_full.dropped_count,
            "estimand": spec.estimand,
        })
        return out

    @app.get("/v1/sessions/{sid}/overlap")
    def overlap(sid: str):
        s = get_session(sid)
        return _overlap_view(s)

    @app.put("/v1/sessions/{sid}/trims")
    def set_trims(sid: str, body: dict):
        s = get_session(sid)
        rules = [
            TrimRule(confounder=r["confounder"],
                     lower_cut=r.get("lower_cut"),
                     upper_cut=r.get("upper_cut"))
            for r in body.get("rules", ())]
        with lock_for(sid):
            _forbid_running_job(jobs.get(sid))
            s.set_trims(rules)
            removed = len(s.trimmed_row_ids)
        out = _overlap_view(s)
        out["removed_rows"] = removed
        return out

    @app.post("/v1/sessions/{sid}/weights")
    def compute_weights(sid: str, body: dict | None = None):
        s = get_session(sid)
        body = body or {}
        algorithms = body.get("algorithms")
        gbm = body.get("gbm", {})
        params = BoostParams(
            max_trees=int(gbm.get("max_trees", BoostParams.max_trees)),
            shrinkage=float(gbm.get("shrinkage", BoostParams.shrinkage)),
            depth=int(gbm.get("depth", BoostParams.depth)),
            eval_stride=int(gbm.get("eval_stride", BoostParams.eval_stride)),
            min_leaf=int(gbm.get("min_leaf", BoostParams.min_leaf)))
        with lock_for(sid):
            _forbid_running_job(jobs.get(sid))
            weight_sets, failures = s.compute_weights(
                gbm_params=params, algorithms=algorithms)
        return {
            "stage": s.stage,
            "algorithms": {
                aid: {
                    "converged": bool(ws.converged),
                    "iterations": None if ws.iterations is None else int(ws.iterations),
                    "chosen_gbm_trees": None if ws.chosen_gbm_trees is None
                                        else int(ws.chosen_gbm_trees),
                    "notes": list(ws.notes),
                    "ess_control": float(
                        (ws.w[s.design.T == 0].sum()) ** 2
                        / (ws.w[s.design.T == 0] ** 2).sum()),
                } for aid, ws in weight_sets.items()
            },
            "failures": failures,
        }

    @app.get("/v1/sessions/{sid}/balance")
    def balance(sid: str):
        s = get_session(sid)
        s.require("WEIGHTED")
        return _balance_view(s.balance_report, s.engine_failures)

    @app.post("/v1/sessions/{sid}/estimate")
    def estimate(sid: str, body: dict | None = None):
        s = get_session(sid)
        body = body or {}
        algorithm = body.get("algorithm", "auto")
        with lock_for(sid):
            _forbid_running_job(jobs.get(sid))
            try:
                est = s.estimate(algorithm)
            except KeyError as err:
                return JSONResponse(status_code=422, content={
                    "error": str(err.args[0])})
        out = _effect_view(est)
        out["stage"] = s.stage
        return out

    @app.post("/v1/sessions/{sid}/sensitivity", status_code=202)
    def start_sensitivity(sid: str, body: dict | None = None):
        s = get_session(sid)
        s.require("ESTIMATED")
        body = body or {}
        kwargs = {}
        if "es_axis" in body:
            kwargs["es_axis"] = tuple(float(v) for v in body["es_axis"])
        if "rho_axis" in body:
            kwargs["rho_axis"] = tuple(float(v) for v in body["rho_axis"])
        if "draws" in body:
            kwargs["draws"] = int(body["draws"])
        grid = GridSpec(**kwargs)
        seed = int(body.get("seed", 0))
        workers = int(body.get("workers",
                               os.environ.get("BALANCELAB_WORKERS", "1")))

        with lock_for(sid):
            _forbid_running_job(jobs.get(sid))
            job = _Job()
            job.total = len(grid.es_axis) * len(grid.rho_axis)
            jobs[sid] = job
            design = s.design
            ws = s.weight_sets[s.chosen_algorithm]
            effect_at_start = s.effect

            def progress(done, total):
                job.done = done
                job.total = total

            def work():
                try:
                    result = sensitivity_grid(
                        design, ws, grid=grid, master_seed=seed,
                        workers=workers,
                        progress=progress, should_stop=job.stop.is_set)
                    # commit only if the session was not mutated meanwhile
                    with lock_for(sid):
                        if s.effect is effect_at_start:
                            s.sensitivity = result
                            s.stage = "SENSITIVITY_DONE"
                            s.touch()
                    job.status = "done"
                except JobCancelled:
                    job.status = "cancelled"
                except Exception as err:  # surface in polling, do not crash
                    job.status = "failed"
                    job.error = str(err)

            job.thread = threading.Thread(target=work, daemon=True)
            job.thread.start()
        return {"job": "sensitivity", "status": job.status,
                "cells": job.total, "stage": s.stage}

    @app.get("/v1/sessions/{sid}/sensitivity")
    def poll_sensitivity(sid: str):
        s = get_session(sid)
        job = jobs.get(sid)
        if job is not None and job.status == "running":
            return {"status": "running",
                    "progress": {"done": job.done, "total": job.total}}
        if job is not None and job.status == "failed":
            return JSONResponse(status_code=422, content={
                "status": "failed", "error": job.error})
        if job is not None and job.status == "cancelled" and s.sensitivity is None:
            return {"status": "cancelled", "stage": s.stage}
        s.require("SENSITIVITY_DONE")
        out = _grid_view(s.sensitivity)
        out["status"] = "done"
        out["stage"] = s.stage
        return out

    @app.delete("/v1/sessions/{sid}/sensitivity")
    def cancel_sensitivity(sid: str):
        get_session(sid)
        job = jobs.get(sid)
        if job is None or job.status != "running":
            return {"status": "idle"}
        job.stop.set()
        job.thread.join()
        return {"status": job.status}

    @app.get("/v1/sessions/{sid}/report")
    def report(sid: str):
        s = get_session(sid)
        return Response(content=render_report(s), media_type="text/html")

    @app.get("/v1/sessions/{sid}/export")
    def export(sid: str, format: str = "csv"):
        s = get_session(sid)
        s.require("WEIGHTED")
        if format not in ("csv", "tsv"):
            return JSONResponse(status_code=422, content={
                "error": f"format must be csv or tsv, got {format!r}"})
        payload = export_data_and_weights(
            s.dataset, s.design, s.weight_sets, format)
        media = "text/csv" if format == "csv" else "text/tab-separated-values"
        return Response(content=payload, media_type=media, headers={
            "Content-Disposition":
                f"attachment; filename=data_and_weights.{format}"})

    return app


def _forbid_running_job(job):
    if job is not None and job.status == "running":
        raise StageError("a sensitivity job is running; cancel it first",
                         required_stage="ESTIMATED")


def main():  # pragma: no cover - thin launcher
    import uvicorn

    # single process: sessions are in-memory; BALANCELAB_WORKERS instead
    # bounds the sensitivity cell pool per job
    host = os.environ.get("BALANCELAB_HOST", "127.0.0.1")
    port = int(os.environ.get("BALANCELAB_PORT", "8000"))
    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":  # pragma: no cover
    main()
