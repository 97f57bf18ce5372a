// Result-view state: which shot is selected and how face windows render.

import type { ScoreReport } from "./types.js";

export type ViewMode = "keyframe" | "shot";

export interface ViewState {
  selectedShot: number;
  viewMode: ViewMode;
}

/**
 * The initially selected shot is the one with the highest score;
 * earliest index wins ties. Shots with null scores never win unless
 * every score is null, in which case shot 0 is selected.
 */
export function defaultShotIndex(report: ScoreReport): number {
  let best = -1;
  let bestScore = -Infinity;
  for (const shot of report.shots) {
    if (shot.shot_score !== null && shot.shot_score > bestScore) {
      best = shot.index;
      bestScore = shot.shot_score;
    }
  }
  return best === -1 ? 0 : best;
}

export function initialViewState(report: ScoreReport): ViewState {
  return { selectedShot: defaultShotIndex(report), viewMode: "shot" };
}
