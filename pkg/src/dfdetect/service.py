"""The deployable HTTP service.

An asynchronous job controller fronts the pipeline: submissions get a
job id immediately (or the cached report synchronously), a worker pool
processes jobs in the background, results and per-shot galleries land in
the object store, and an append-only journal makes the job table survive
restarts. Every error surfaces as application/problem+json.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import shutil
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qsl, urlencode, urlsplit

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from starlette.exceptions import HTTPException as StarletteHTTPException

from .config import ServiceConfig
from .errors import (
    GalleryNotFoundError,
    InterruptedJobError,
    JobNotFoundError,
    PipelineFailure,
    ProblemError,
    QueueFullError,
    ResultNotReadyError,
    UnauthorizedError,
    ValidationProblem,
)
from .media import download_media
from .modelcard import render_model_card
from .pipeline import PipelineComponents, analyze_media, build_backend, gallery_key
from .storage import FilesystemObjectStore, ObjectStore
from .types import PROBLEM_CONTENT_TYPE, Job, JobState, ProblemDetail, canonical_json_bytes
from .version import SERVICE_VERSION, ServiceVersion

logger = logging.getLogger(__name__)

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*$")
_REPORT_ID_RE = re.compile(r"^[0-9a-f]{64}$")

_PROGRESS_NOTES: dict[JobState, str] = {
    "queued": "waiting for a worker",
    "processing": "pipeline running",
    "completed": "result ready",
    "failed": "see problem",
}


def canonical_cache_key(url: str, version: ServiceVersion) -> str:
    """Digest of the canonicalized URL plus the full service version.

    Lowercased scheme and host, fragment stripped, query parameters
    sorted; version changes invalidate the cache automatically.
    """
    parts = urlsplit(url)
    if not _SCHEME_RE.match(parts.scheme or ""):
        raise ValidationProblem(f"not a valid URL: {url!r}")
    if not parts.netloc and not parts.path:
        raise ValidationProblem(f"URL has neither host nor path: {url!r}")
    query = urlencode(sorted(parse_qsl(parts.query, keep_blank_values=True)))
    canonical = f"{parts.scheme.lower()}://{parts.netloc.lower()}{parts.path}?{query}|{version}"
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class JobJournal:
    """Append-only JSONL journal; replay rebuilds the job table."""

    def __init__(self, path: str):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, event: dict) -> None:
        line = json.dumps(event, sort_keys=True)
        with self._lock:
            with open(self.path, "a") as fh:
                fh.write(line + "\n")
                fh.flush()

    def replay(self) -> list[dict]:
        if not self.path.exists():
            return []
        events = []
        with open(self.path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
        return events


class ReportCache:
    """TTL cache over the object store, keyed by canonical cache keys."""

    def __init__(self, store: ObjectStore, ttl_seconds: float, clock=time.time):
        self.store = store
        self.ttl = ttl_seconds
        self.clock = clock

    def _entry_key(self, key: str) -> str:
        return f"cache/{key}.json"

    def get(self, key: str) -> Optional[bytes]:
        entry_key = self._entry_key(key)
        if not self.store.exists(entry_key):
            return None
        entry = json.loads(self.store.get(entry_key))
        if self.clock() - entry["created_at"] > entry["ttl"]:
            self.store.delete(entry_key)
            return None
        try:
            return self.store.get(entry["report_ref"])
        except KeyError:
            return None

    def put(self, key: str, report_ref: str) -> None:
        entry = {
            "key": key,
            "report_ref": report_ref,
            "created_at": self.clock(),
            "ttl": self.ttl,
        }
        self.store.put(self._entry_key(key), canonical_json_bytes(entry))


class JobController:
    """Owns the job table, the cache, and the worker pool."""

    def __init__(self, config: ServiceConfig,
                 components: Optional[PipelineComponents] = None,
                 store: Optional[ObjectStore] = None):
        self.config = config
        if components is None:
            components = _components_from_config(config)
        self.components = components
        root = Path(config.storage_root)
        self.store = store if store is not None else FilesystemObjectStore(str(root / "objects"))
        self.cache = ReportCache(self.store, config.cache_ttl_seconds)
        self.journal = JobJournal(str(root / "journal.ndjson"))
        self.version = SERVICE_VERSION
        self._jobs: dict[str, Job] = {}
        self._lock = threading.RLock()
        self._replay_journal()
        self._pool = ThreadPoolExecutor(
            max_workers=config.workers, thread_name_prefix="dfdetect-job")

    # -- journal -------------------------------------------------------------

    def _replay_journal(self) -> None:
        for event in self.journal.replay():
            kind = event.get("event")
            if kind == "submitted":
                job = Job.from_json_obj(event["job"])
                self._jobs[job.job_id] = job
            elif kind == "transition":
                job = self._jobs.get(event["job_id"])
                if job is None:
                    continue
                problem = event.get("problem")
                self._jobs[job.job_id] = Job(
                    job_id=job.job_id,
                    state=event["state"],
                    submitted_at=job.submitted_at,
                    url=job.url,
                    result_ref=event.get("result_ref"),
                    problem=None if problem is None else ProblemDetail.from_json_obj(problem),
                )
        interrupted = [j for j in self._jobs.values()
                       if j.state in ("queued", "processing")]
        for job in interrupted:
            problem = InterruptedJobError(
                f"job {job.job_id} was interrupted by a service restart").problem
            self._transition(job.job_id, "failed", problem=problem)
            logger.warning("journal replay failed interrupted job %s", job.job_id)

    def _transition(self, job_id: str, state: JobState, *,
                    result_ref: Optional[str] = None,
                    problem: Optional[ProblemDetail] = None) -> None:
        with self._lock:
            old = self._jobs[job_id]
            from .types import is_valid_transition

            if not is_valid_transition(old.state, state):
                raise ValidationProblem(
                    f"illegal job transition {old.state} -> {state}")
            self._jobs[job_id] = Job(
                job_id=old.job_id, state=state, submitted_at=old.submitted_at,
                url=old.url, result_ref=result_ref, problem=problem)
            self.journal.append({
                "event": "transition",
                "job_id": job_id,
                "state": state,
                "result_ref": result_ref,
                "problem": None if problem is None else problem.to_json_obj(),
            })

    # -- API operations -------------------------------------------------------

    def submit(self, url: str) -> tuple[str, object]:
        """Returns ("cached", report bytes) or ("queued", Job)."""
        key = canonical_cache_key(url, self.version)
        cached = self.cache.get(key)
        if cached is not None:
            return ("cached", cached)
        with self._lock:
            pending = sum(1 for j in self._jobs.values()
                          if j.state in ("queued", "processing"))
            if pending >= self.config.max_pending_jobs:
                raise QueueFullError(
                    f"{pending} jobs pending (limit {self.config.max_pending_jobs})")
            job = Job(
                job_id=uuid.uuid4().hex,
                state="queued",
                submitted_at=datetime.now(timezone.utc).isoformat(),
                url=url,
            )
            self._jobs[job.job_id] = job
            self.journal.append({"event": "submitted", "job": job.to_json_obj()})
        self._pool.submit(self._run, job.job_id, key)
        return ("queued", job)

    def _run(self, job_id: str, cache_key: str) -> None:
        try:
            self._transition(job_id, "processing")
            job = self.status(job_id)
            download_dir = Path(self.config.storage_root) / "downloads" / job_id
            try:
                media = download_media(
                    job.url,
                    proxy=self.config.proxy,
                    dest_dir=str(download_dir),
                    max_bytes=self.config.max_download_bytes,
                )
                report = analyze_media(
                    media,
                    self.config.pipeline,
                    self.components,
                    pipeline_version=str(self.version),
                    shot_workers=self.config.shot_workers,
                    report_id=cache_key,
                    gallery_store=self.store,
                )
            finally:
                shutil.rmtree(download_dir, ignore_errors=True)
            report_ref = f"reports/{cache_key}.json"
            self.store.put(report_ref, report.to_json_bytes())
            self.cache.put(cache_key, report_ref)
            self._transition(job_id, "completed", result_ref=report_ref)
        except ProblemError as exc:
            logger.warning("job %s failed: %s", job_id, exc.detail)
            self._transition(job_id, "failed", problem=exc.problem)
        except Exception as exc:  # defensive: never lose a job record
            logger.exception("job %s crashed", job_id)
            problem = PipelineFailure(str(exc)).problem
            self._transition(job_id, "failed", problem=problem)

    def status(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise JobNotFoundError(f"no job with id {job_id!r}")
        return job

    def result(self, job_id: str) -> bytes:
        job = self.status(job_id)
        if job.state in ("queued", "processing"):
            raise ResultNotReadyError(
                f"job {job_id} is still {job.state}; poll until completed")
        if job.state == "failed":
            assert job.problem is not None
            raise ProblemError.from_problem(job.problem)
        assert job.result_ref is not None
        return self.store.get(job.result_ref)

    def gallery(self, report_id: str, shot_index: int) -> bytes:
        if not _REPORT_ID_RE.match(report_id):
            raise ValidationProblem(f"malformed report id {report_id!r}")
        try:
            return self.store.get(gallery_key(report_id, shot_index))
        except KeyError:
            raise GalleryNotFoundError(
                f"no gallery for report {report_id} shot {shot_index}") from None

    def info(self) -> dict:
        return {
            "version": str(self.version),
            "pipeline": self.config.pipeline.to_json_obj(),
            "model_card_url": "/v3/model-card",
        }

    def shutdown(self, wait: bool = True) -> None:
        self._pool.shutdown(wait=wait)


def _components_from_config(config: ServiceConfig) -> PipelineComponents:
    from .pipeline import reference_components

    backends = tuple(build_backend(spec) for spec in config.backends)
    return reference_components(backends=backends)


# --- HTTP layer --------------------------------------------------------------


def problem_response(problem: ProblemDetail) -> Response:
    return Response(
        content=problem.to_json_bytes(),
        status_code=problem.status,
        media_type=PROBLEM_CONTENT_TYPE,
    )


def create_app(config: ServiceConfig,
               components: Optional[PipelineComponents] = None,
               controller: Optional[JobController] = None) -> FastAPI:
    """Build the FastAPI application around a job controller."""
    ctrl = controller if controller is not None else JobController(config, components)

    @asynccontextmanager
    async def lifespan(_app):
        yield
        ctrl.shutdown(wait=True)

    app = FastAPI(title="dfdetect", version=str(ctrl.version),
                  docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.controller = ctrl

    tokens = set(config.tokens)

    def require_auth(request: Request) -> None:
        if not tokens:
            return
        header = request.headers.get("authorization", "")
        if not header.startswith("Bearer ") or header[len("Bearer "):] not in tokens:
            raise UnauthorizedError("a valid bearer token is required",
                                    instance=request.url.path)

    @app.exception_handler(ProblemError)
    async def handle_problem(request: Request, exc: ProblemError):
        problem = exc.problem
        if problem.instance is None:
            problem = ProblemDetail(
                type=problem.type, title=problem.title, status=problem.status,
                detail=problem.detail, instance=request.url.path)
        return problem_response(problem)

    @app.exception_handler(StarletteHTTPException)
    async def handle_http_exception(request: Request, exc: StarletteHTTPException):
        return problem_response(ProblemDetail(
            type="urn:dfdetect:problem:http",
            title=str(exc.detail),
            status=exc.status_code,
            detail=str(exc.detail),
            instance=request.url.path,
        ))

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        return problem_response(ProblemDetail(
            type="urn:dfdetect:problem:validation",
            title="Invalid Request",
            status=400,
            detail=str(exc.errors()),
            instance=request.url.path,
        ))

    @app.post("/v3/jobs")
    async def submit_job(request: Request):
        require_auth(request)
        try:
            payload = await request.json()
        except Exception:
            raise ValidationProblem("request body must be JSON")
        if not isinstance(payload, dict) or not isinstance(payload.get("url"), str):
            raise ValidationProblem('request body must be {"url": "..."}')
        kind, value = ctrl.submit(payload["url"])
        if kind == "cached":
            return Response(content=value, media_type="application/json", status_code=200)
        job: Job = value  # type: ignore[assignment]
        return JSONResponse({"job_id": job.job_id}, status_code=202)

    @app.get("/v3/jobs/{job_id}")
    async def job_status(job_id: str, request: Request):
        require_auth(request)
        job = ctrl.status(job_id)
        body = job.to_json_obj()
        body["progress"] = _PROGRESS_NOTES[job.state]
        return JSONResponse(body)

    @app.get("/v3/jobs/{job_id}/result")
    async def job_result(job_id: str, request: Request):
        require_auth(request)
        return Response(content=ctrl.result(job_id), media_type="application/json")

    @app.get("/v3/galleries/{report_id}/{filename}")
    async def gallery(report_id: str, filename: str, request: Request):
        require_auth(request)
        m = re.match(r"^(\d+)\.png$", filename)
        if m is None:
            raise ValidationProblem(f"gallery file must be <shot_index>.png, got {filename!r}")
        return Response(content=ctrl.gallery(report_id, int(m.group(1))),
                        media_type="image/png")

    @app.get("/v3/info")
    async def info():
        return JSONResponse(ctrl.info())

    @app.get("/v3/model-card")
    async def model_card():
        return Response(content=render_model_card(version=str(ctrl.version)),
                        media_type="text/markdown")

    return app


def run_service(config: ServiceConfig) -> None:
    """Run the service until signaled (blocking)."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
