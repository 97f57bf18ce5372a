// Image analysis view: the source image with one score overlay pinned
// to the top edge of each detected face's bounding box.

import { el } from "../dom.js";
import { formatPercent, formatScoreOrNull } from "../format.js";
import type { ScoreReport } from "../types.js";
import { attachHoverZoom } from "../zoom.js";

export interface ImageViewOptions {
  /** URL the browser can load for the analyzed image (source or gallery). */
  imageUrl?: string;
}

export function renderImageView(report: ScoreReport, opts: ImageViewOptions = {}): HTMLElement {
  const root = el("section", { class: "image-view", "data-kind": "image" });
  const shot = report.shots[0];
  const faces = shot ? shot.clusters.flatMap((c) => c.faces) : [];

  if (report.no_faces_detected || faces.length === 0) {
    root.append(el("p", { class: "empty-state" }, [
      "No faces were detected in this image.",
    ]));
    return root;
  }

  const stage = el("div", { class: "image-stage" });
  if (opts.imageUrl) {
    stage.append(el("img", { class: "image-source", src: opts.imageUrl, alt: "analyzed image" }));
    attachHoverZoom(stage, opts.imageUrl);
  }
  for (const face of faces) {
    const overlay = el("div", {
      class: "face-overlay",
      "data-score": String(face.score),
      style:
        `position:absolute;left:${face.box.x0}px;top:${face.box.y0}px;` +
        `width:${face.box.x1 - face.box.x0}px;height:${face.box.y1 - face.box.y0}px;`,
    });
    overlay.append(el("span", { class: "face-score" }, [formatPercent(face.score)]));
    stage.append(overlay);
  }
  root.append(stage);

  root.append(el("footer", { class: "overall" }, [
    "Overall DeepFake score: ",
    el("strong", { class: "overall-score" }, [formatScoreOrNull(report.overall)]),
  ]));
  return root;
}
