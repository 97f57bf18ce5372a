// Video analysis view: embedded playback, a shot selector with the
// highest-scoring shot preselected, per-face-cluster windows offering
// "Keyframe" and "Shot" (default) views with hover-to-zoom, and the
// overall score at the bottom of the page.

import { el } from "../dom.js";
import { formatInterval, formatPercent, formatScoreOrNull } from "../format.js";
import type { ClusterEntry, ScoreReport, ShotEntry } from "../types.js";
import { initialViewState, ViewMode, ViewState } from "../viewstate.js";
import { attachHoverZoom } from "../zoom.js";

export interface VideoViewOptions {
  /** playable URL for the source video, when the browser can fetch it */
  sourceUrl?: string;
  /** resolves a report gallery_ref to a loadable URL */
  galleryUrlFor?: (ref: string) => string;
}

function clusterWindow(cluster: ClusterEntry, shot: ShotEntry, mode: ViewMode,
                       opts: VideoViewOptions,
                       onModeChange: (mode: ViewMode) => void): HTMLElement {
  const representative = cluster.faces[0];
  const window_ = el("article", {
    class: "face-window",
    "data-cluster-id": String(cluster.cluster_id),
    "data-view-mode": mode,
  });
  window_.append(el("header", { class: "face-window-header" }, [
    `Face cluster ${cluster.cluster_id} · `,
    el("strong", { class: "cluster-score" }, [formatPercent(cluster.cluster_score)]),
    el("span", { class: "face-count" }, [` · ${cluster.faces.length} detections`]),
  ]));

  const toggle = el("div", { class: "view-toggle", role: "group" });
  for (const candidate of ["keyframe", "shot"] as ViewMode[]) {
    const button = el("button", {
      class: "view-toggle-button",
      type: "button",
      "data-mode": candidate,
      "aria-pressed": String(candidate === mode),
    }, [candidate === "keyframe" ? "Keyframe" : "Shot"]);
    button.addEventListener("click", () => onModeChange(candidate));
    toggle.append(button);
  }
  window_.append(toggle);

  const body = el("div", { class: "face-window-body" });
  const galleryUrl = shot.gallery_ref && opts.galleryUrlFor
    ? opts.galleryUrlFor(shot.gallery_ref)
    : null;
  if (mode === "shot") {
    if (galleryUrl) {
      body.append(el("img", { class: "shot-collage", src: galleryUrl,
                              alt: `keyframe collage for shot ${shot.index}` }));
      attachHoverZoom(body, galleryUrl);
    } else {
      body.append(el("p", { class: "missing-media" }, ["shot collage unavailable"]));
    }
  } else {
    if (opts.sourceUrl) {
      const video = el("video", {
        class: "keyframe-player",
        src: `${opts.sourceUrl}#t=${representative.timestamp}`,
        preload: "metadata",
      });
      body.append(video);
    } else if (galleryUrl) {
      body.append(el("img", { class: "keyframe-fallback", src: galleryUrl,
                              alt: "keyframe preview" }));
      attachHoverZoom(body, galleryUrl);
    } else {
      body.append(el("p", { class: "missing-media" }, ["keyframe preview unavailable"]));
    }
    body.append(el("p", { class: "keyframe-time" }, [
      `keyframe at ${representative.timestamp.toFixed(2)}s`,
    ]));
  }
  window_.append(body);
  return window_;
}

export function renderVideoView(report: ScoreReport, opts: VideoViewOptions = {}): HTMLElement {
  const root = el("section", { class: "video-view", "data-kind": "video" });
  let state: ViewState = initialViewState(report);

  const render = () => {
    root.replaceChildren();
    root.dataset.selectedShot = String(state.selectedShot);
    root.dataset.viewMode = state.viewMode;

    if (opts.sourceUrl) {
      root.append(el("video", {
        class: "source-player", controls: "", src: opts.sourceUrl, preload: "metadata",
      }));
    }

    const selector = el("nav", { class: "shot-selector", role: "tablist" });
    for (const shot of report.shots) {
      const button = el("button", {
        class: "shot-tab",
        type: "button",
        "data-shot-index": String(shot.index),
        "aria-selected": String(shot.index === state.selectedShot),
      }, [
        // analysts see 1-based shot numbers; data attributes keep the
        // report's 0-based index
        `Shot ${shot.index + 1} (${formatInterval(shot.start, shot.end)}) · `,
        el("span", { class: "shot-score" }, [formatScoreOrNull(shot.shot_score)]),
      ]);
      button.addEventListener("click", () => {
        state = { ...state, selectedShot: shot.index };
        render();
      });
      selector.append(button);
    }
    root.append(selector);

    const selected = report.shots.find((s) => s.index === state.selectedShot);
    if (selected) {
      root.append(el("p", { class: "shot-interval" }, [
        `Selected shot interval: ${formatInterval(selected.start, selected.end)}`,
      ]));
      const windows = el("div", { class: "face-windows" });
      if (selected.clusters.length === 0) {
        windows.append(el("p", { class: "empty-state" }, [
          "No face clusters survived filtering in this shot.",
        ]));
      }
      for (const cluster of selected.clusters) {
        windows.append(clusterWindow(cluster, selected, state.viewMode, opts, (mode) => {
          state = { ...state, viewMode: mode };
          render();
        }));
      }
      root.append(windows);
    }

    // the overall score is always the last element on the page
    root.append(el("footer", { class: "overall" }, [
      "Overall DeepFake score: ",
      el("strong", { class: "overall-score" }, [formatScoreOrNull(report.overall)]),
    ]));
  };

  render();
  return root;
}
