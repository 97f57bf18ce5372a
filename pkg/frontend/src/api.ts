// Thin client over the service HTTP API. The bearer token lives in
// memory for the session only; it is never persisted.

import type { JobStatus, ProblemDetail, ScoreReport } from "./types.js";

export class ProblemError extends Error {
  constructor(public readonly problem: ProblemDetail) {
    super(`${problem.title}: ${problem.detail}`);
  }
}

export type SubmitOutcome =
  | { kind: "cached"; report: ScoreReport }
  | { kind: "accepted"; jobId: string };

type FetchLike = typeof fetch;

async function toProblem(response: Response): Promise<ProblemDetail> {
  try {
    return (await response.json()) as ProblemDetail;
  } catch {
    return {
      type: "about:blank",
      title: `HTTP ${response.status}`,
      status: response.status,
      detail: response.statusText || "request failed",
      instance: null,
    };
  }
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private token: string | null = null,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  setToken(token: string | null): void {
    this.token = token && token.length > 0 ? token : null;
  }

  private headers(json: boolean): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw new ProblemError(await toProblem(response));
    }
    return response;
  }

  async submit(url: string): Promise<SubmitOutcome> {
    const response = await this.request("/v3/jobs", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ url }),
    });
    if (response.status === 200) {
      return { kind: "cached", report: (await response.json()) as ScoreReport };
    }
    const body = (await response.json()) as { job_id: string };
    return { kind: "accepted", jobId: body.job_id };
  }

  async jobStatus(jobId: string): Promise<JobStatus> {
    const response = await this.request(`/v3/jobs/${jobId}`, {
      headers: this.headers(false),
    });
    return (await response.json()) as JobStatus;
  }

  async jobResult(jobId: string): Promise<ScoreReport> {
    const response = await this.request(`/v3/jobs/${jobId}/result`, {
      headers: this.headers(false),
    });
    return (await response.json()) as ScoreReport;
  }

  async galleryBlobUrl(galleryRef: string): Promise<string> {
    const response = await this.request(galleryRef, { headers: this.headers(false) });
    return URL.createObjectURL(await response.blob());
  }

  galleryUrl(galleryRef: string): string {
    return `${this.baseUrl}${galleryRef}`;
  }
}
