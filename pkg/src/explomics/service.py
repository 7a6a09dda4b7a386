"""HTTP/JSON gateway exposing sessions to interactive clients.

Every response is an envelope {"status": "ok", "payload": ...} or
{"status": "error", "error": {code, message, location}}. Malformed bodies
get 400, unknown resources 404 and failing steps 422; a failing step leaves
its session untouched. Long steps can run asynchronously and are observed
by polling the per-step status resource.
"""

from __future__ import annotations

import itertools
import os
import threading

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .dataset import Dataset, AnnotationTable, parse_matrix
from .errors import ExplomicsError, ValidationError
from .nullmodels import NullSpec, expected_projection_content, signal_noise_ratio
from .session import (
    Session,
    Step,
    apply as apply_step,
    export_session,
    new_session,
    undo as undo_session,
)
from .svd import approx_entries, biplot_coordinates, compute_dual_svd, projection_content

API_SCHEMA_VERSION = "explomics.api/1"

#: published JSON schema for every response body
RESPONSE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": API_SCHEMA_VERSION,
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "status": {"const": "ok"},
                "payload": {},
            },
            "required": ["status", "payload"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "status": {"const": "error"},
                "error": {
                    "type": "object",
                    "properties": {
                        "code": {"type": "string"},
                        "message": {"type": "string"},
                        "location": {"type": "string"},
                    },
                    "required": ["code", "message"],
                    "additionalProperties": False,
                },
            },
            "required": ["status", "error"],
            "additionalProperties": False,
        },
    ],
}


def _ok(payload, status_code=200):
    return JSONResponse({"status": "ok", "payload": payload}, status_code=status_code)


def _err(code, message, status_code, location=None):
    error = {"code": code, "message": message}
    if location is not None:
        error["location"] = location
    return JSONResponse({"status": "error", "error": error}, status_code=status_code)


class _BadRequest(Exception):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class _NotFound(Exception):
    def __init__(self, sid):
        super().__init__(sid)
        self.sid = sid


class _Record:
    """One live session plus its job ledger."""

    def __init__(self, session: Session):
        self.session = session
        self.lock = threading.Lock()
        self.jobs = {}  # job id -> {"status", "step_index", "error", "kind"}
        self._job_counter = itertools.count()

    def new_job(self, kind):
        job_id = next(self._job_counter)
        self.jobs[job_id] = {"status": "running", "kind": kind,
                             "step_index": None, "error": None}
        return job_id


def _state_summary(session: Session):
    return {
        "n_variables": session.dataset.n_variables,
        "n_samples": session.dataset.n_samples,
        "dof_adjustment": session.state.dof_adjustment,
        "n_steps": len(session.steps),
    }


def _dataset_from_body(body, data_dir):
    if "dataset" in body:
        d = body["dataset"]
        if not isinstance(d, dict):
            raise _BadRequest("dataset must be an object", location="/dataset")
        for key in ("values", "variable_ids", "sample_ids"):
            if key not in d:
                raise _BadRequest(f"dataset.{key} is required", location=f"/dataset/{key}")
        values = np.asarray(d["values"], dtype=np.float64)
        mask = np.zeros_like(values, dtype=bool)
        for j, k in d.get("missing", []):
            mask[j, k] = True
        return Dataset(np.where(mask, np.nan, values), mask,
                       d["variable_ids"], d["sample_ids"])
    if "dataset_path" in body:
        if data_dir is None:
            raise _BadRequest("server has no data directory configured",
                              location="/dataset_path")
        rel = str(body["dataset_path"])
        path = os.path.normpath(os.path.join(data_dir, rel))
        if not path.startswith(os.path.abspath(data_dir) + os.sep) and path != os.path.abspath(data_dir):
            raise _BadRequest("dataset_path escapes the data directory",
                              location="/dataset_path")
        if not os.path.exists(path):
            raise _BadRequest(f"no such dataset file {rel!r}", location="/dataset_path")
        with open(path, "r", encoding="utf-8") as handle:
            return parse_matrix(
                handle,
                delimiter=body.get("delimiter", "auto"),
                orientation=body.get("orientation", "variables-in-rows"),
            )
    raise _BadRequest("provide dataset or dataset_path", location="/")


def _annotations_from_body(body):
    tables = []
    for i, entry in enumerate(body.get("annotations", [])):
        if not isinstance(entry, dict) or "scope" not in entry or "factors" not in entry:
            raise _BadRequest("annotation needs scope and factors",
                              location=f"/annotations/{i}")
        tables.append(AnnotationTable(scope=entry["scope"], factors=entry["factors"]))
    return tuple(tables)


def _step_from_body(body):
    kind = body.get("kind")
    if not isinstance(kind, str):
        raise _BadRequest("step kind must be a string", location="/kind")
    params = body.get("params", {})
    if not isinstance(params, dict):
        raise _BadRequest("step params must be an object", location="/params")
    seed = body.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise _BadRequest("seed must be an integer", location="/seed")
    try:
        return Step(kind=kind, params=params, seed=seed)
    except ValidationError as exc:
        raise _BadRequest(str(exc), location="/kind") from None


def create_app(data_dir=None) -> FastAPI:
    app = FastAPI(title="explomics gateway", version=API_SCHEMA_VERSION)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = {}
    store_lock = threading.Lock()
    session_counter = itertools.count(1)

    @app.exception_handler(RequestValidationError)
    async def _on_validation(_, exc):
        return _err("malformed-body", str(exc), 400)

    @app.exception_handler(_BadRequest)
    async def _on_bad_request(_, exc):
        return _err("malformed-body", str(exc), 400, location=exc.location)

    @app.exception_handler(ExplomicsError)
    async def _on_domain_error(_, exc):
        return _err("domain-error", str(exc), 422)

    async def _json_body(request: Request):
        try:
            body = await request.json()
        except Exception:
            raise _BadRequest("body is not valid JSON", location="/") from None
        if not isinstance(body, dict):
            raise _BadRequest("body must be a JSON object", location="/")
        return body

    def _get_record(sid) -> _Record:
        record = store.get(sid)
        if record is None:
            raise _NotFound(sid)
        return record

    @app.exception_handler(_NotFound)
    async def _on_not_found(_, exc):
        return _err("unknown-session", f"no session {exc.sid!r}", 404)

    @app.get("/schema")
    def get_schema():
        return _ok({"version": API_SCHEMA_VERSION, "response_schema": RESPONSE_SCHEMA})

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await _json_body(request)
        try:
            dataset = _dataset_from_body(body, data_dir)
            annotations = _annotations_from_body(body)
        except (ValidationError,) as exc:
            raise _BadRequest(str(exc)) from None
        session = new_session(dataset, annotations)
        sid = f"s{next(session_counter)}"
        with store_lock:
            store[sid] = _Record(session)
        return _ok({"session_id": sid, "state": _state_summary(session)}, status_code=201)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        record = _get_record(sid)
        session = record.session
        return _ok({
            "state": _state_summary(session),
            "steps": [
                {"index": i, "kind": r.kind, "params": r.params, "seed": r.seed,
                 "dof_delta": r.dof_delta, "has_artifact": r.artifact is not None}
                for i, r in enumerate(session.steps)
            ],
            "detected_signals": [dict(s) for s in session.detected_signals],
        })

    def _run_step(record: _Record, step: Step, job_id):
        job = record.jobs[job_id]
        try:
            with record.lock:
                session = apply_step(record.session, step)
                record.session = session
                job["step_index"] = len(session.steps) - 1
                job["status"] = "completed"
        except ExplomicsError as exc:
            job["status"] = "failed"
            job["error"] = str(exc)

    @app.post("/sessions/{sid}/steps")
    async def post_step(sid: str, request: Request):
        record = _get_record(sid)
        body = await _json_body(request)
        step = _step_from_body(body)
        job_id = record.new_job(step.kind)
        if body.get("async", False):
            worker = threading.Thread(target=_run_step, args=(record, step, job_id),
                                      daemon=True)
            worker.start()
            return _ok({"job": job_id, "status": "running",
                        "poll": f"/sessions/{sid}/steps/{job_id}"}, status_code=202)
        _run_step(record, step, job_id)
        job = record.jobs[job_id]
        if job["status"] == "failed":
            return _err("step-failed", job["error"], 422)
        session = record.session
        index = job["step_index"]
        return _ok({
            "job": job_id,
            "status": "completed",
            "step_index": index,
            "artifact": session.steps[index].artifact,
            "state": _state_summary(session),
        })

    @app.get("/sessions/{sid}/steps/{job_id}")
    def get_step_status(sid: str, job_id: int):
        record = _get_record(sid)
        job = record.jobs.get(job_id)
        if job is None:
            return _err("unknown-job", f"no job {job_id} in session {sid!r}", 404)
        payload = {"job": job_id, "status": job["status"], "kind": job["kind"]}
        if job["status"] == "completed":
            payload["step_index"] = job["step_index"]
            payload["artifact"] = record.session.steps[job["step_index"]].artifact
        elif job["status"] == "failed":
            payload["error"] = job["error"]
        return _ok(payload)

    @app.post("/sessions/{sid}/undo")
    def post_undo(sid: str):
        record = _get_record(sid)
        with record.lock:
            record.session = undo_session(record.session)
            return _ok({"state": _state_summary(record.session)})

    @app.get("/sessions/{sid}/biplot")
    def get_biplot(sid: str, S: str = "1,2,3", null_trials: int = 20, seed: int = 0,
                   include_pairings: bool = True):
        record = _get_record(sid)
        session = record.session
        try:
            requested = sorted({int(tok) for tok in S.split(",") if tok.strip()})
        except ValueError:
            raise _BadRequest(f"bad component list {S!r}", location="S") from None
        if not requested or min(requested) < 1:
            raise _BadRequest(f"bad component list {S!r}", location="S")
        values = session.dataset.complete_values()
        svd = compute_dual_svd(values)
        used = [c for c in requested if c <= svd.rank]
        if not used:
            raise ValidationError(f"no requested component <= rank {svd.rank}")
        coords = biplot_coordinates(svd, used)
        observed = projection_content(svd, used)
        spec = NullSpec(
            p=session.dataset.n_variables,
            n=session.dataset.n_samples,
            standardized=any(r.kind == "standardize" for r in session.steps),
            trials=null_trials,
            seed=seed,
        )
        null_mean, null_sd = expected_projection_content(spec, used)
        payload = {
            "components": list(coords.components),
            "weights": [float(x) for x in coords.weights],
            "sample_ids": list(session.dataset.sample_ids),
            "variable_ids": list(session.dataset.variable_ids),
            "sample_coords": [[float(x) for x in row] for row in coords.sample_coords],
            "variable_coords": [[float(x) for x in row] for row in coords.variable_coords],
            "alpha2": {
                "observed": observed,
                "null_mean": null_mean,
                "null_sd": null_sd,
                "ratio": signal_noise_ratio(observed, null_mean),
                "trials": null_trials,
                "seed": seed,
                "standardized": spec.standardized,
            },
        }
        if include_pairings:
            payload["pairings"] = [
                [float(x) for x in row] for row in approx_entries(svd, used)
            ]
        return _ok(payload)

    @app.get("/sessions/{sid}/tests")
    def get_tests(sid: str):
        record = _get_record(sid)
        for i in range(len(record.session.steps) - 1, -1, -1):
            r = record.session.steps[i]
            if r.kind == "t_test":
                return _ok({"step_index": i, "table": r.artifact["table"]})
        return _err("no-tests", "session has no t_test step", 404)

    @app.get("/sessions/{sid}/export")
    def get_export(sid: str):
        record = _get_record(sid)
        return _ok(export_session(record.session))

    return app
