// Fixed report payloads used across the UI tests. Scores are chosen so
// every displayed number traces back to a specific field here.

import type { ScoreReport } from "../src/types.js";

export const VIDEO_REPORT: ScoreReport = {
  media_kind: "video",
  overall: 0.9,
  no_faces_detected: false,
  pipeline_version: "3.0.0",
  shots: [
    {
      index: 0,
      start: 0.0,
      end: 4.0,
      sampled_frames: 32,
      shot_score: 0.3,
      gallery_ref: "/v3/galleries/aaaa/0.png",
      clusters: [
        {
          cluster_id: 0,
          cluster_score: 0.3,
          faces: [
            { timestamp: 0.0, box: { x0: 10, y0: 10, x1: 60, y1: 60 }, score: 0.25 },
            { timestamp: 1.0, box: { x0: 12, y0: 10, x1: 62, y1: 60 }, score: 0.35 },
          ],
        },
      ],
    },
    {
      index: 1,
      start: 4.0,
      end: 9.0,
      sampled_frames: 40,
      shot_score: 0.9,
      gallery_ref: "/v3/galleries/aaaa/1.png",
      clusters: [
        {
          cluster_id: 0,
          cluster_score: 0.9,
          faces: [
            { timestamp: 4.0, box: { x0: 100, y0: 40, x1: 160, y1: 100 }, score: 0.9 },
          ],
        },
      ],
    },
    {
      index: 2,
      start: 9.0,
      end: 15.0,
      sampled_frames: 48,
      shot_score: 0.5,
      gallery_ref: "/v3/galleries/aaaa/2.png",
      clusters: [
        {
          cluster_id: 0,
          cluster_score: 0.5,
          faces: [
            { timestamp: 9.0, box: { x0: 30, y0: 30, x1: 90, y1: 90 }, score: 0.5 },
          ],
        },
        {
          cluster_id: 2,
          cluster_score: 0.2,
          faces: [
            { timestamp: 9.0, box: { x0: 200, y0: 30, x1: 260, y1: 90 }, score: 0.2 },
          ],
        },
      ],
    },
  ],
};

export const IMAGE_REPORT: ScoreReport = {
  media_kind: "image",
  overall: 0.8,
  no_faces_detected: false,
  pipeline_version: "3.0.0",
  shots: [
    {
      index: 0,
      start: 0.0,
      end: 0.0,
      sampled_frames: 1,
      shot_score: 0.8,
      gallery_ref: "/v3/galleries/bbbb/0.png",
      clusters: [
        {
          cluster_id: 0,
          cluster_score: 0.2,
          faces: [{ timestamp: 0.0, box: { x0: 40, y0: 80, x1: 120, y1: 160 }, score: 0.2 }],
        },
        {
          cluster_id: 1,
          cluster_score: 0.8,
          faces: [{ timestamp: 0.0, box: { x0: 200, y0: 80, x1: 280, y1: 160 }, score: 0.8 }],
        },
      ],
    },
  ],
};

export const EMPTY_IMAGE_REPORT: ScoreReport = {
  media_kind: "image",
  overall: null,
  no_faces_detected: true,
  pipeline_version: "3.0.0",
  shots: [
    {
      index: 0,
      start: 0.0,
      end: 0.0,
      sampled_frames: 1,
      shot_score: null,
      gallery_ref: null,
      clusters: [],
    },
  ],
};
