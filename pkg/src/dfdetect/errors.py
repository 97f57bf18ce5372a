"""Exception hierarchy mapping internal failures to problem details.

Every error that can surface at an external boundary carries a
:class:`~dfdetect.types.ProblemDetail` so HTTP handlers and the CLI can
emit application/problem+json bodies without translation tables.
"""

from __future__ import annotations

from typing import Optional

from .types import ProblemDetail

PROBLEM_TYPE_BASE = "urn:dfdetect:problem:"


class ProblemError(Exception):
    """Base error carrying an RFC 7807 style problem payload."""

    slug = "internal"
    title = "Internal Error"
    status = 500

    def __init__(self, detail: str, *, instance: Optional[str] = None,
                 status: Optional[int] = None, title: Optional[str] = None):
        super().__init__(detail)
        self.detail = detail
        self.instance = instance
        self._problem_override: Optional[ProblemDetail] = None
        if status is not None:
            self.status = status
        if title is not None:
            self.title = title

    @property
    def problem(self) -> ProblemDetail:
        if self._problem_override is not None:
            return self._problem_override
        return ProblemDetail(
            type=PROBLEM_TYPE_BASE + self.slug,
            title=self.title,
            status=self.status,
            detail=self.detail,
            instance=self.instance,
        )

    @classmethod
    def from_problem(cls, problem: ProblemDetail) -> "ProblemError":
        """Re-raise a stored problem verbatim (type and status preserved)."""
        err = cls(problem.detail, instance=problem.instance,
                  status=problem.status, title=problem.title)
        err._problem_override = problem
        return err


class InvariantViolation(ProblemError):
    slug = "invariant-violation"
    title = "Invariant Violation"
    status = 500


class ValidationProblem(ProblemError):
    slug = "validation"
    title = "Invalid Request"
    status = 400


class UnauthorizedError(ProblemError):
    slug = "unauthorized"
    title = "Missing or Invalid Credentials"
    status = 401


class JobNotFoundError(ProblemError):
    slug = "job-not-found"
    title = "Job Not Found"
    status = 404


class ResultNotReadyError(ProblemError):
    slug = "result-not-ready"
    title = "Result Not Ready"
    status = 409


class GalleryNotFoundError(ProblemError):
    slug = "gallery-not-found"
    title = "Gallery Not Found"
    status = 404


class QueueFullError(ProblemError):
    slug = "queue-full"
    title = "Job Queue Full"
    status = 429


class NoResolverError(ProblemError):
    slug = "no-resolver"
    title = "No Resolver Accepts This URL"
    status = 422


class DownloadError(ProblemError):
    slug = "download-failed"
    title = "Media Download Failed"
    status = 502


class MediaTooLargeError(ProblemError):
    slug = "media-too-large"
    title = "Media Exceeds Size Limit"
    status = 413


class MediaDecodeError(ProblemError):
    slug = "media-undecodable"
    title = "Media Cannot Be Decoded"
    status = 415


class BackendError(ProblemError):
    slug = "backend-error"
    title = "Scorer Backend Failed"
    status = 502

    def __init__(self, detail: str, *, backend: Optional[str] = None, **kwargs):
        super().__init__(detail, **kwargs)
        self.backend = backend


class MetricUndefinedError(ProblemError):
    slug = "metric-undefined"
    title = "Metric Undefined For This Input"
    status = 422


class FixtureSpecError(ValidationProblem):
    slug = "invalid-fixture-spec"
    title = "Invalid Fixture Spec"


class ConfigError(ValidationProblem):
    slug = "invalid-config"
    title = "Invalid Configuration"


class PipelineFailure(ProblemError):
    slug = "pipeline-failure"
    title = "Pipeline Stage Failed"
    status = 500

    def __init__(self, detail: str, *, stage: Optional[str] = None, **kwargs):
        if stage:
            detail = f"stage {stage}: {detail}"
        super().__init__(detail, **kwargs)
        self.stage = stage


class InterruptedJobError(ProblemError):
    slug = "interrupted"
    title = "Job Interrupted By Restart"
    status = 503
