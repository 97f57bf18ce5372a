// Submit-and-poll driver: posts the URL, walks the job through its
// states with exponential backoff, and lands the report (or problem)
// in the store.

import { ProblemError, ServiceClient } from "./api.js";
import { ExponentialBackoff } from "./backoff.js";
import { AppStore } from "./store.js";

export type SleepFn = (ms: number) => Promise<void>;

const realSleep: SleepFn = (ms) => new Promise((resolve) => setTimeout(resolve, ms));

export class JobPoller {
  constructor(
    private readonly client: ServiceClient,
    private readonly store: AppStore,
    private readonly sleep: SleepFn = realSleep,
  ) {}

  async submitAndPoll(url: string): Promise<void> {
    this.store.dispatch({ type: "submitted", url });
    try {
      const outcome = await this.client.submit(url);
      if (outcome.kind === "cached") {
        // no polling phase: the service answered synchronously
        this.store.dispatch({ type: "cache-hit", report: outcome.report });
        return;
      }
      this.store.dispatch({ type: "job-accepted", jobId: outcome.jobId });
      const backoff = new ExponentialBackoff();
      for (;;) {
        const status = await this.client.jobStatus(outcome.jobId);
        this.store.dispatch({ type: "job-state", state: status.state });
        if (status.state === "completed") {
          this.store.dispatch({ type: "fetching-result" });
          const report = await this.client.jobResult(outcome.jobId);
          this.store.dispatch({ type: "completed", report });
          return;
        }
        if (status.state === "failed") {
          this.store.dispatch({
            type: "problem",
            problem: status.problem ?? {
              type: "about:blank",
              title: "Job failed",
              status: 500,
              detail: "the job failed without a stored problem",
              instance: null,
            },
          });
          return;
        }
        await this.sleep(backoff.nextDelay());
      }
    } catch (error) {
      if (error instanceof ProblemError) {
        this.store.dispatch({ type: "problem", problem: error.problem });
        return;
      }
      this.store.dispatch({
        type: "problem",
        problem: {
          type: "about:blank",
          title: "Network error",
          status: 0 as number,
          detail: String(error),
          instance: null,
        },
      });
    }
  }
}
