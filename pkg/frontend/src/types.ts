// Wire types mirroring the service's canonical JSON. The UI never
// computes scores; every number it displays comes from these payloads.

export interface Box {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface FaceEntry {
  timestamp: number;
  box: Box;
  score: number;
}

export interface ClusterEntry {
  cluster_id: number;
  cluster_score: number;
  faces: FaceEntry[];
}

export interface ShotEntry {
  index: number;
  start: number;
  end: number;
  sampled_frames: number;
  shot_score: number | null;
  clusters: ClusterEntry[];
  gallery_ref: string | null;
}

export interface ScoreReport {
  media_kind: "image" | "video";
  overall: number | null;
  no_faces_detected: boolean;
  shots: ShotEntry[];
  pipeline_version: string;
}

export type JobState = "queued" | "processing" | "completed" | "failed";

export interface JobStatus {
  job_id: string;
  state: JobState;
  submitted_at: string;
  url: string;
  result_ref: string | null;
  problem: ProblemDetail | null;
  progress?: string;
}

export interface ProblemDetail {
  type: string;
  title: string;
  status: number;
  detail: string;
  instance: string | null;
}
