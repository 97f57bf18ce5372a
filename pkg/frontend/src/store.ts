// One store for the whole page, updated exclusively through message
// events; views subscribe and re-render on every change.

import type { JobState, ProblemDetail, ScoreReport } from "./types.js";

export type Phase =
  | "idle"
  | "submitting"
  | "polling"
  | "fetching-result"
  | "done"
  | "problem";

export interface AppState {
  phase: Phase;
  sourceUrl: string | null;
  jobId: string | null;
  jobState: JobState | null;
  /** every distinct job state observed while polling, in order */
  stateHistory: JobState[];
  report: ScoreReport | null;
  problem: ProblemDetail | null;
  cached: boolean;
}

export type AppEvent =
  | { type: "submitted"; url: string }
  | { type: "cache-hit"; report: ScoreReport }
  | { type: "job-accepted"; jobId: string }
  | { type: "job-state"; state: JobState }
  | { type: "fetching-result" }
  | { type: "completed"; report: ScoreReport }
  | { type: "problem"; problem: ProblemDetail }
  | { type: "reset" };

export function initialState(): AppState {
  return {
    phase: "idle",
    sourceUrl: null,
    jobId: null,
    jobState: null,
    stateHistory: [],
    report: null,
    problem: null,
    cached: false,
  };
}

export function reduce(state: AppState, event: AppEvent): AppState {
  switch (event.type) {
    case "submitted":
      return { ...initialState(), phase: "submitting", sourceUrl: event.url };
    case "cache-hit":
      return { ...state, phase: "done", report: event.report, cached: true };
    case "job-accepted":
      return { ...state, phase: "polling", jobId: event.jobId };
    case "job-state": {
      const history = state.stateHistory.includes(event.state)
        ? state.stateHistory
        : [...state.stateHistory, event.state];
      return { ...state, phase: "polling", jobState: event.state, stateHistory: history };
    }
    case "fetching-result":
      return { ...state, phase: "fetching-result" };
    case "completed":
      return { ...state, phase: "done", report: event.report };
    case "problem":
      return { ...state, phase: "problem", problem: event.problem };
    case "reset":
      return initialState();
  }
}

export class AppStore {
  private state = initialState();
  private listeners = new Set<(state: AppState) => void>();

  getState(): AppState {
    return this.state;
  }

  dispatch(event: AppEvent): void {
    this.state = reduce(this.state, event);
    for (const listener of this.listeners) listener(this.state);
  }

  subscribe(listener: (state: AppState) => void): () => void {
    this.listeners.add(listener);
    listener(this.state);
    return () => this.listeners.delete(listener);
  }
}
